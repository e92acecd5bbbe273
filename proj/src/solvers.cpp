#include "gussp/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "gussp/compiler.hpp"
#include "gussp/rng.hpp"

namespace gussp {

Heuristic zero_heuristic() {
    return [](NodeId) { return 0.0; };
}

// ---------------------------------------------------------------------------
// ValueTable / Policy

ValueTable::ValueTable(const Ssp& ssp, Heuristic heuristic)
    : ssp_(&ssp), heuristic_(heuristic ? std::move(heuristic) : zero_heuristic()) {}

void ValueTable::grow(NodeId x) {
    const auto i = static_cast<std::size_t>(x);
    if (i >= values_.size()) {
        const std::size_t n = std::max(i + 1, ssp_->num_states());
        values_.resize(n, 0.0);
        flags_.resize(n, 0);
    }
}

double ValueTable::get(NodeId x) {
    grow(x);
    const auto i = static_cast<std::size_t>(x);
    if (!(flags_[i] & kInit)) {
        values_[i] = ssp_->is_goal(x) ? 0.0 : heuristic_(x);
        flags_[i] |= kInit;
    }
    return values_[i];
}

void ValueTable::set(NodeId x, double value) {
    grow(x);
    const auto i = static_cast<std::size_t>(x);
    values_[i] = value;
    flags_[i] |= kInit;
}

bool ValueTable::initialized(NodeId x) const { return flag(x, kInit); }

bool ValueTable::flag(NodeId x, std::uint8_t f) const {
    const auto i = static_cast<std::size_t>(x);
    return i < flags_.size() && (flags_[i] & f) != 0;
}

void ValueTable::set_flag(NodeId x, std::uint8_t f) {
    grow(x);
    flags_[static_cast<std::size_t>(x)] |= f;
}

void Policy::set(NodeId x, ActionId a) {
    const auto i = static_cast<std::size_t>(x);
    if (i >= actions_.size()) {
        actions_.resize(i + 1, kNone);
    }
    actions_[i] = a;
}

// ---------------------------------------------------------------------------
// Backups

BackupResult bellman_backup(Ssp& ssp, ValueTable& values, NodeId x) {
    if (ssp.is_goal(x)) {
        const double old = values.get(x);
        return {0.0, 0, std::fabs(old)};
    }
    // Copy the rows first: a lazy heuristic may expand states and move the
    // successor store while values are being read.
    static thread_local std::vector<Transition> rows;
    static thread_local std::vector<std::size_t> ends;
    rows.clear();
    ends.clear();
    for (ActionId a = 0; a < ssp.num_actions(); ++a) {
        const auto outs = ssp.outcomes(x, a);
        rows.insert(rows.end(), outs.begin(), outs.end());
        ends.push_back(rows.size());
    }
    BackupResult best{std::numeric_limits<double>::infinity(), Policy::kNone, 0.0};
    std::size_t begin = 0;
    for (ActionId a = 0; a < ssp.num_actions(); ++a) {
        double q = ssp.cost(x, a);
        const std::size_t end = ends[static_cast<std::size_t>(a)];
        for (std::size_t i = begin; i < end; ++i) {
            q += rows[i].probability * values.get(rows[i].next);
        }
        begin = end;
        if (q < best.value) {
            best.value = q;
            best.action = a;
        }
    }
    best.residual = std::fabs(best.value - values.get(x));
    return best;
}

ActionId greedy_action(Ssp& ssp, ValueTable& values, NodeId x) {
    const BackupResult r = bellman_backup(ssp, values, x);
    if (!ssp.is_goal(x)) {
        values.set(x, r.value);
    }
    return r.action;
}

// ---------------------------------------------------------------------------
// Value iteration

SolveResult value_iteration(Ssp& ssp, const ViOptions& options) {
    const ReachableSet reachable = enumerate_reachable(ssp, options.state_budget);
    SolveResult result{ValueTable(ssp, options.initial), Policy{}, SolveStats{}};
    result.stats.expanded = reachable.count();
    for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double max_residual = 0.0;
        for (NodeId x : reachable.states) {
            if (ssp.is_goal(x)) {
                continue;
            }
            const BackupResult r = bellman_backup(ssp, result.values, x);
            result.values.set(x, r.value);
            result.policy.set(x, r.action);
            max_residual = std::max(max_residual, r.residual);
        }
        result.stats.iterations = sweep;
        if (options.on_sweep) {
            options.on_sweep(sweep, max_residual, reachable.count());
        }
        if (max_residual < options.epsilon) {
            // Refresh the policy against the final values.
            for (NodeId x : reachable.states) {
                if (!ssp.is_goal(x)) {
                    result.policy.set(x, bellman_backup(ssp, result.values, x).action);
                }
            }
            return result;
        }
    }
    throw GusspError(ErrorKind::NonConvergence,
                     "value iteration did not converge within " + std::to_string(options.max_sweeps) + " sweeps");
}

// ---------------------------------------------------------------------------
// LAO*

SolveStats lao_star(Ssp& ssp, ValueTable& values, Policy& policy, NodeId start, const LaoOptions& options) {
    SolveStats stats;
    std::vector<std::uint32_t> visited;
    std::vector<std::uint8_t> expanded_here;
    auto ensure = [&](NodeId x) {
        const auto i = static_cast<std::size_t>(x);
        if (i >= visited.size()) {
            const std::size_t n = std::max(i + 1, ssp.num_states());
            visited.resize(n, 0);
            expanded_here.resize(n, 0);
        }
    };
    // States expanded in earlier calls count as already part of the envelope.
    auto in_envelope = [&](NodeId x) { return ssp.expanded(x) && policy.at(x) != Policy::kNone; };

    struct Frame {
        NodeId x;
        std::size_t next = 0;
    };
    std::vector<Frame> stack;

    for (std::uint32_t pass = 1; pass <= options.max_iterations; ++pass) {
        bool expanded_tip = false;
        bool policy_changed = false;
        double max_residual = 0.0;
        ensure(start);
        visited[static_cast<std::size_t>(start)] = pass;
        stack.clear();
        stack.push_back({start});
        while (!stack.empty()) {
            Frame& f = stack.back();
            const NodeId x = f.x;
            if (ssp.is_goal(x)) {
                stack.pop_back();
                continue;
            }
            if (f.next == 0 && !in_envelope(x) && !expanded_here[static_cast<std::size_t>(x)]) {
                // Tip of the best partial solution graph: expand, back up, do not descend.
                ssp.expand(x);
                ensure(x);
                expanded_here[static_cast<std::size_t>(x)] = 1;
                ++stats.expanded;
                expanded_tip = true;
                const BackupResult r = bellman_backup(ssp, values, x);
                values.set(x, r.value);
                policy.set(x, r.action);
                max_residual = std::max(max_residual, r.residual);
                stack.pop_back();
                continue;
            }
            const auto outs = ssp.outcomes(x, policy.at(x));
            if (f.next < outs.size()) {
                const NodeId y = outs[f.next].next;
                ++f.next;
                ensure(y);
                if (visited[static_cast<std::size_t>(y)] != pass) {
                    visited[static_cast<std::size_t>(y)] = pass;
                    stack.push_back({y});
                }
                continue;
            }
            const BackupResult r = bellman_backup(ssp, values, x);
            values.set(x, r.value);
            // A switched action may lead to states this pass never visited.
            policy_changed = policy_changed || r.action != policy.at(x);
            policy.set(x, r.action);
            max_residual = std::max(max_residual, r.residual);
            stack.pop_back();
        }
        stats.iterations = pass;
        if (options.on_iteration) {
            options.on_iteration(pass, max_residual, stats.expanded);
        }
        if (!expanded_tip && !policy_changed && max_residual < options.epsilon) {
            return stats;
        }
    }
    throw GusspError(ErrorKind::NonConvergence,
                     "LAO* did not converge within " + std::to_string(options.max_iterations) + " iterations");
}

SolveResult lao_star(Ssp& ssp, Heuristic heuristic, const LaoOptions& options) {
    SolveResult result{ValueTable(ssp, std::move(heuristic)), Policy{}, SolveStats{}};
    result.stats = lao_star(ssp, result.values, result.policy, ssp.start(), options);
    return result;
}

// ---------------------------------------------------------------------------
// FLARES

namespace {

class FlaresSolver {
public:
    FlaresSolver(Ssp& ssp, ValueTable& values, Policy& policy, const FlaresOptions& options)
        : ssp_(ssp), values_(values), policy_(policy), options_(options), rng_(options.seed) {}

    SolveStats run(NodeId s0) {
        ++epoch_;
        SolveStats stats;
        while (!labeled(s0)) {
            if (stats.trials >= options_.max_trials) {
                stats.budget_exhausted = true;
                break;
            }
            trial(s0);
            ++stats.trials;
        }
        stats.iterations = stats.trials;
        stats.expanded = expanded_;
        return stats;
    }

    bool labeled(NodeId x) const {
        const auto i = static_cast<std::size_t>(x);
        return ssp_.is_goal(x) || values_.solved(x) || (i < depth_label_.size() && depth_label_[i] == epoch_);
    }

private:

    // Distinct states whose successors the solver has examined.
    void touch(NodeId x) {
        const auto i = static_cast<std::size_t>(x);
        if (i >= touched_.size()) {
            touched_.resize(std::max(i + 1, ssp_.num_states()), 0);
        }
        if (!touched_[i]) {
            touched_[i] = 1;
            ++expanded_;
        }
    }

    BackupResult update(NodeId x) {
        touch(x);
        const BackupResult r = bellman_backup(ssp_, values_, x);
        values_.set(x, r.value);
        policy_.set(x, r.action);
        return r;
    }

    NodeId sample(NodeId x, ActionId a) {
        const auto outs = ssp_.outcomes(x, a);
        return outs[rng_.pick(outs, [](const Transition& t) { return t.probability; })].next;
    }

    void trial(NodeId s0) {
        path_.clear();
        NodeId x = s0;
        while (!labeled(x)) {
            path_.push_back(x);
            const BackupResult r = update(x);
            if (path_.size() >= options_.max_trial_depth) {
                break;
            }
            x = sample(x, r.action);
        }
        while (!path_.empty()) {
            const NodeId y = path_.back();
            path_.pop_back();
            if (!check_solved(y)) {
                break;
            }
        }
    }

    // Explores the greedy graph from x. With a finite horizon t the search is
    // cut at depth 2t; states within depth t are then labeled depth-solved.
    bool check_solved(NodeId x) {
        const bool bounded = options_.horizon != kUnboundedHorizon;
        const std::size_t cutoff = bounded ? 2 * static_cast<std::size_t>(options_.horizon) : 0;
        bool consistent = true;
        bool truncated = false;
        open_.clear();
        closed_.clear();
        ++stamp_;
        auto visit = [&](NodeId y, std::size_t depth) {
            const auto i = static_cast<std::size_t>(y);
            if (i >= seen_.size()) {
                seen_.resize(std::max(i + 1, ssp_.num_states()), 0);
            }
            if (seen_[i] == stamp_) {
                return;
            }
            seen_[i] = stamp_;
            open_.push_back({y, depth});
        };
        visit(x, 0);
        while (!open_.empty()) {
            const auto [y, depth] = open_.back();
            open_.pop_back();
            touch(y);
            const BackupResult r = bellman_backup(ssp_, values_, y);
            closed_.push_back({y, depth, r.action});
            if (r.residual > options_.epsilon) {
                consistent = false;
                continue;
            }
            if (bounded && depth >= cutoff) {
                truncated = true;
                continue;
            }
            for (const Transition& t : ssp_.outcomes(y, r.action)) {
                if (!ssp_.is_goal(t.next) && !values_.solved(t.next)) {
                    visit(t.next, depth + 1);
                }
            }
        }
        if (consistent) {
            for (const auto& [y, depth, action] : closed_) {
                // Labeled states keep the action that passed the residual test.
                policy_.set(y, action);
                if (!truncated) {
                    values_.mark_solved(y);
                } else if (depth <= static_cast<std::size_t>(options_.horizon)) {
                    const auto i = static_cast<std::size_t>(y);
                    if (i >= depth_label_.size()) {
                        depth_label_.resize(std::max(i + 1, ssp_.num_states()), 0);
                    }
                    depth_label_[i] = epoch_;
                }
            }
        } else {
            for (auto it = closed_.rbegin(); it != closed_.rend(); ++it) {
                update(it->node);
            }
        }
        return consistent;
    }

    Ssp& ssp_;
    ValueTable& values_;
    Policy& policy_;
    FlaresOptions options_;
    Rng rng_;
    std::size_t expanded_ = 0;
    std::vector<NodeId> path_;
    std::vector<std::pair<NodeId, std::size_t>> open_;
    struct Closed {
        NodeId node;
        std::size_t depth;
        ActionId action;
    };
    std::vector<Closed> closed_;
    std::vector<std::uint32_t> seen_;
    std::vector<std::uint8_t> touched_;
    std::uint32_t stamp_ = 0;
    // Depth-t labels carry the epoch of the run that set them.
    std::vector<std::uint32_t> depth_label_;
    std::uint32_t epoch_ = 0;
};

}  // namespace

SolveResult flares(Ssp& ssp, Heuristic heuristic, const FlaresOptions& options) {
    SolveResult result{ValueTable(ssp, std::move(heuristic)), Policy{}, SolveStats{}};
    FlaresSolver solver(ssp, result.values, result.policy, options);
    result.stats = solver.run(ssp.start());
    return result;
}

struct FlaresPlanner::Impl {
    Impl(Ssp& ssp, Heuristic heuristic, const FlaresOptions& options)
        : values(ssp, std::move(heuristic)), solver(ssp, values, policy, options) {}

    ValueTable values;
    Policy policy;
    FlaresSolver solver;
    SolveStats total;
};

FlaresPlanner::FlaresPlanner(Ssp& ssp, Heuristic heuristic, const FlaresOptions& options)
    : impl_(std::make_unique<Impl>(ssp, std::move(heuristic), options)) {}

FlaresPlanner::~FlaresPlanner() = default;

SolveStats FlaresPlanner::solve(NodeId from) {
    const SolveStats s = impl_->solver.run(from);
    SolveStats& t = impl_->total;
    t.trials += s.trials;
    t.iterations = t.trials;
    t.expanded = s.expanded;
    t.budget_exhausted = t.budget_exhausted || s.budget_exhausted;
    return t;
}

const SolveStats& FlaresPlanner::stats() const { return impl_->total; }
bool FlaresPlanner::labeled(NodeId x) const { return impl_->solver.labeled(x); }
ValueTable& FlaresPlanner::values() { return impl_->values; }
const Policy& FlaresPlanner::policy() const { return impl_->policy; }

}  // namespace gussp
