#pragma once

// Solvers for (compiled) SSPs: value iteration, LAO* (improved, depth-first
// variant) and a FLARES-style trial solver with depth-limited labeling.
// Ties between actions are always broken by the lowest action id.

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "gussp/ssp.hpp"

namespace gussp {

/// Admissible estimate of the cost-to-go; must return 0 at goal states.
using Heuristic = std::function<double(NodeId)>;

Heuristic zero_heuristic();

/// Value estimates over interned states, initialized lazily from a heuristic.
class ValueTable {
public:
    ValueTable(const Ssp& ssp, Heuristic heuristic);

    double get(NodeId x);
    void set(NodeId x, double value);
    bool initialized(NodeId x) const;

    bool solved(NodeId x) const { return flag(x, kSolved); }
    void mark_solved(NodeId x) { set_flag(x, kSolved); }

private:
    static constexpr std::uint8_t kInit = 1;
    static constexpr std::uint8_t kSolved = 2;

    void grow(NodeId x);
    bool flag(NodeId x, std::uint8_t f) const;
    void set_flag(NodeId x, std::uint8_t f);

    const Ssp* ssp_;
    Heuristic heuristic_;
    std::vector<double> values_;
    std::vector<std::uint8_t> flags_;
};

class Policy {
public:
    static constexpr ActionId kNone = -1;

    ActionId at(NodeId x) const {
        const auto i = static_cast<std::size_t>(x);
        return i < actions_.size() ? actions_[i] : kNone;
    }
    void set(NodeId x, ActionId a);

private:
    std::vector<ActionId> actions_;
};

struct BackupResult {
    double value = 0.0;
    ActionId action = Policy::kNone;
    double residual = 0.0;
};

/// min_a [cost(x,a) + sum_x' p * v(x')]. Does not modify the table's entry for x.
BackupResult bellman_backup(Ssp& ssp, ValueTable& values, NodeId x);

struct SolveStats {
    std::size_t iterations = 0;
    std::size_t expanded = 0;
    std::size_t trials = 0;
    /// Soft failure: the trial budget ran out before the start was labeled.
    bool budget_exhausted = false;
};

struct SolveResult {
    ValueTable values;
    Policy policy;
    SolveStats stats;
};

/// Called after every sweep / iteration with (iteration, max residual, expanded states).
using ConvergenceCallback = std::function<void(std::size_t, double, std::size_t)>;

struct ViOptions {
    double epsilon = 1e-6;
    std::size_t max_sweeps = 100'000;
    std::size_t state_budget = 10'000'000;
    /// Initial values; zero when empty.
    Heuristic initial;
    ConvergenceCallback on_sweep;
};

/// Gauss-Seidel sweeps over the states reachable from the start.
SolveResult value_iteration(Ssp& ssp, const ViOptions& options = {});

struct LaoOptions {
    double epsilon = 1e-6;
    std::size_t max_iterations = 100'000;
    ConvergenceCallback on_iteration;
};

SolveResult lao_star(Ssp& ssp, Heuristic heuristic, const LaoOptions& options = {});

/// Resumable form: continues from existing values and policy, solving from `start`.
SolveStats lao_star(Ssp& ssp, ValueTable& values, Policy& policy, NodeId start, const LaoOptions& options = {});

inline constexpr int kUnboundedHorizon = -1;

struct FlaresOptions {
    /// Labeling depth t; kUnboundedHorizon gives labeled RTDP.
    int horizon = 1;
    double epsilon = 1e-3;
    std::size_t max_trials = 100'000;
    std::size_t max_trial_depth = 100'000;
    std::uint64_t seed = 0;
};

SolveResult flares(Ssp& ssp, Heuristic heuristic, const FlaresOptions& options = {});

/// Resumable FLARES for replanning: keeps its table, policy, solved labels and
/// RNG across calls to solve(), each of which runs trials until `from` is
/// labeled. Depth-t labels only hold until the next call.
class FlaresPlanner {
public:
    FlaresPlanner(Ssp& ssp, Heuristic heuristic, const FlaresOptions& options = {});
    ~FlaresPlanner();
    FlaresPlanner(const FlaresPlanner&) = delete;
    FlaresPlanner& operator=(const FlaresPlanner&) = delete;

    SolveStats solve(NodeId from);
    /// Accumulated over calls; budget_exhausted is set once any call runs out.
    const SolveStats& stats() const;
    /// Goal, solved, or depth-solved by the latest call.
    bool labeled(NodeId x) const;
    ValueTable& values();
    const Policy& policy() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Greedy action at x; backs up x in place so repeated calls make progress.
ActionId greedy_action(Ssp& ssp, ValueTable& values, NodeId x);

}  // namespace gussp
