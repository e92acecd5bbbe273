#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gussp {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30u)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27u)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31u);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(seed) ^ (stream * 0xd1342543de82ef95ull + 1));
}

/// Seedable generator with distribution code that does not depend on the
/// standard library implementation, so runs reproduce across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    /// Index drawn from unnormalized nonnegative weights.
    template <typename Weights, typename Proj>
    std::size_t pick(const Weights& items, Proj weight_of) {
        double total = 0.0;
        for (const auto& it : items) {
            total += weight_of(it);
        }
        double u = uniform() * total;
        std::size_t i = 0;
        std::size_t last_positive = 0;
        for (const auto& it : items) {
            const double w = weight_of(it);
            if (w > 0.0) {
                last_positive = i;
                if (u < w) {
                    return i;
                }
                u -= w;
            }
            ++i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace gussp
