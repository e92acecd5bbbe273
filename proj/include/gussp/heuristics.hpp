#pragma once

// Goal-uncertainty heuristic h_pg, the min-outcome relaxation h_min, and the
// base-level distance oracle they rely on.

#include <limits>
#include <unordered_map>
#include <vector>

#include "gussp/compiler.hpp"
#include "gussp/solvers.hpp"

namespace gussp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Cheapest trajectory cost from every base state to every potential goal in
/// the all-outcome determinization of the base model (each action may move
/// along any positive-probability outcome, normal or goal-conditioned).
class DistanceOracle {
public:
    DistanceOracle() = default;
    explicit DistanceOracle(const GusspModel& model);

    int num_goals() const noexcept { return num_goals_; }
    /// kInfinity when potential goal `goal` is unreachable from s.
    double distance(StateId s, int goal) const {
        return dist_[static_cast<std::size_t>(s) * static_cast<std::size_t>(num_goals_) +
                     static_cast<std::size_t>(goal)];
    }

private:
    int num_goals_ = 0;
    std::vector<double> dist_;
};

DistanceOracle build_distance_oracle(const GusspModel& model);

/// min over consistent configurations g with b(g) > 0 of (1 - b(g)) * min_{i in g} d(s, i); 0 at goals.
double h_pg(const GusspModel& model, const CompiledState& x, const DistanceOracle& oracle);

/// h_pg bound to a compiled SSP, memoizing the posterior per knowledge vector.
class HpgHeuristic {
public:
    HpgHeuristic(CompiledSsp& ssp, const DistanceOracle& oracle);

    double operator()(NodeId x);
    double evaluate(const CompiledState& x);

private:
    struct Entry {
        GoalConfig config;
        double not_goal_weight;  // 1 - b(g)
    };
    const std::vector<Entry>& entries(const KnowledgeVector& k);

    CompiledSsp* ssp_;
    const DistanceOracle* oracle_;
    std::unordered_map<std::uint32_t, std::vector<Entry>> cache_;
};

/// Min-min relaxation h(x) = min_a [c(x,a) + min_{x': p > 0} h(x')], h(goal) = 0.
/// Evaluated lazily by uniform-cost search forward from the queried state;
/// exact values along every shortest path found are memoized.
class MinMinHeuristic {
public:
    explicit MinMinHeuristic(Ssp& ssp);

    double operator()(NodeId x);
    std::size_t searches() const noexcept { return searches_; }

private:
    double search(NodeId x);

    Ssp* ssp_;
    std::vector<double> exact_;  // NaN when unknown
    std::size_t searches_ = 0;
};

/// h_min(x) for a single state of a compiled SSP.
double h_min(Ssp& ssp, NodeId x);

}  // namespace gussp
