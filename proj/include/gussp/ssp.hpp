#pragma once

// Lazily expanded SSP with interned states. Derived classes supply the goal
// test and a successor generator over opaque 64-bit state keys; this base
// owns the dense id space and a flat successor store.
//
// Not thread-safe: expansion and interning mutate shared tables. Give each
// solver thread its own instance.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "gussp/model.hpp"

namespace gussp {

using NodeId = std::int32_t;
using StateKey = std::uint64_t;

struct Transition {
    NodeId next;
    double probability;
};

class Ssp {
public:
    explicit Ssp(int num_actions);
    virtual ~Ssp() = default;

    Ssp(const Ssp&) = delete;
    Ssp& operator=(const Ssp&) = delete;
    Ssp(Ssp&&) = default;
    Ssp& operator=(Ssp&&) = default;

    int num_actions() const noexcept { return num_actions_; }
    NodeId start() const noexcept { return start_; }
    std::size_t num_states() const noexcept { return keys_.size(); }
    std::size_t num_expanded() const noexcept { return num_expanded_; }

    bool is_goal(NodeId id) const { return goal_[static_cast<std::size_t>(id)] != 0; }
    bool expanded(NodeId id) const { return row_[static_cast<std::size_t>(id)] >= 0; }
    StateKey key(NodeId id) const { return keys_[static_cast<std::size_t>(id)]; }

    NodeId intern(StateKey key);
    /// -1 when the key has not been interned.
    NodeId find(StateKey key) const;

    void expand(NodeId id);
    /// Both accessors expand on demand. Goal states are absorbing with zero cost.
    double cost(NodeId id, ActionId a);
    std::span<const Transition> outcomes(NodeId id, ActionId a);

protected:
    struct GeneratedRow {
        double cost = 0.0;
        std::vector<std::pair<StateKey, double>> outcomes;
    };

    virtual bool goal_key(StateKey key) const = 0;
    /// Fill one row per action for a non-goal key.
    virtual void generate(StateKey key, std::vector<GeneratedRow>& rows) const = 0;

    /// Must be called once by the derived constructor.
    void set_start(StateKey key);

private:
    int num_actions_;
    NodeId start_ = -1;
    std::size_t num_expanded_ = 0;
    std::vector<StateKey> keys_;
    std::vector<std::uint8_t> goal_;
    std::vector<std::int64_t> row_;  // index into costs_, -1 if unexpanded
    std::unordered_map<StateKey, NodeId> index_;
    std::vector<double> costs_;               // num_actions per expanded state
    std::vector<std::uint32_t> offsets_;      // num_actions + 1 per expanded state
    std::vector<Transition> transitions_;
    std::vector<GeneratedRow> scratch_;
};

}  // namespace gussp
