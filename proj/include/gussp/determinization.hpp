#pragma once

// Goal determinization: plan for one potential goal at a time and replan for
// another one when the current target turns out not to be a goal.

#include <map>
#include <memory>

#include "gussp/heuristics.hpp"
#include "gussp/rng.hpp"
#include "gussp/solvers.hpp"
#include "gussp/trial.hpp"

namespace gussp {

enum class GoalSelector { MostLikely, Closest };

/// argmax of the posterior marginal over eligible goals (not ConfirmedNotGoal,
/// not in `excluded`, positive marginal). Ties are broken uniformly with `rng`.
int select_goal_mlg(const KnowledgeVector& k, const GoalPrior& prior, Rng& rng, GoalConfig excluded = 0);

/// argmin of d(s, i) over eligible goals, random tie-break.
int select_goal_cg(StateId s, const KnowledgeVector& k, const GoalPrior& prior, const DistanceOracle& oracle,
                   Rng& rng, GoalConfig excluded = 0);

/// Base model with the goal fixed to one potential goal. Knowledge is frozen:
/// the target behaves as a goal, every other site as a non-goal. States are
/// (base state, done flag); the flag is set by the target's goal-conditioned
/// effect, or reaching the target is itself the goal when the model
/// terminates on arrival.
class SingleGoalSsp : public Ssp {
public:
    SingleGoalSsp(std::shared_ptr<const GusspModel> model, int target);

    int target() const noexcept { return target_; }
    NodeId node(StateId s) { return intern(static_cast<StateKey>(s) << 1); }
    StateId base_state(NodeId x) const { return static_cast<StateId>(key(x) >> 1); }

protected:
    bool goal_key(StateKey key) const override;
    void generate(StateKey key, std::vector<GeneratedRow>& rows) const override;

private:
    std::shared_ptr<const GusspModel> model_;
    int target_;
};

struct DeterminizedPlan {
    int target = -1;
    StateId from = 0;
    std::unique_ptr<SingleGoalSsp> ssp;
    std::unique_ptr<MinMinHeuristic> heuristic;
    std::unique_ptr<ValueTable> values;
    Policy policy;
    double planning_time = 0.0;
};

struct DeterminizationOptions {
    std::size_t step_budget = 100'000;
    LaoOptions inner;
    bool capture_trace = false;
};

/// Executes replan-on-disconfirmation trials. Inner single-goal plans are
/// solved with LAO* + h_min and cached per (target, root state) for the
/// lifetime of the executor. A plan is never extended after its solve; leaving
/// its solution graph switches to the plan rooted at the current state. A
/// cached plan therefore depends only on its key, and trials do not depend on
/// the order they run in.
class DeterminizedExecutor {
public:
    DeterminizedExecutor(std::shared_ptr<const GusspModel> model, std::shared_ptr<const DistanceOracle> oracle,
                         GoalSelector selector, DeterminizationOptions options = {});

    TrialRecord execute(GoalConfig g_true, std::uint64_t seed);

    /// Cached plan for `target` from base state `from`; solves on a miss.
    DeterminizedPlan& plan(int target, StateId from);
    using PlanKey = std::pair<int, StateId>;
    const std::map<PlanKey, std::unique_ptr<DeterminizedPlan>>& plans() const noexcept { return plans_; }

private:
    int select(StateId s, const KnowledgeVector& k, Rng& rng, GoalConfig excluded) const;
    ActionId action_for(DeterminizedPlan& plan, StateId s) const;

    std::shared_ptr<const GusspModel> model_;
    std::shared_ptr<const DistanceOracle> oracle_;
    GoalSelector selector_;
    DeterminizationOptions options_;
    std::map<PlanKey, std::unique_ptr<DeterminizedPlan>> plans_;
};

/// Single trial of DET-MLG / DET-CG with a fresh plan cache.
TrialRecord execute_determinized(std::shared_ptr<const GusspModel> model, GoalSelector selector, GoalConfig g_true,
                                 std::uint64_t seed, const DeterminizationOptions& options = {});

}  // namespace gussp
