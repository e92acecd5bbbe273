#include "gussp/determinization.hpp"

#include <bit>
#include <chrono>
#include <cmath>

namespace gussp {

namespace {

constexpr double kTieTolerance = 1e-12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> eligible_marginals(const KnowledgeVector& k, const GoalPrior& prior, GoalConfig excluded) {
    const auto posterior = posterior_config(prior, k);
    std::vector<double> marginal(static_cast<std::size_t>(k.size()), 0.0);
    for (const auto& w : posterior) {
        for (GoalConfig rest = w.config; rest != 0; rest &= rest - 1) {
            marginal[static_cast<std::size_t>(std::countr_zero(rest))] += w.probability;
        }
    }
    for (int i = 0; i < k.size(); ++i) {
        const bool blocked = k.status(i) == GoalStatus::ConfirmedNotGoal || ((excluded >> i) & 1u) != 0;
        if (blocked) {
            marginal[static_cast<std::size_t>(i)] = 0.0;
        }
    }
    return marginal;
}

int pick_tied(const std::vector<int>& tied, Rng& rng) {
    if (tied.empty()) {
        throw GusspError(ErrorKind::NoEligibleGoal, "every potential goal is disconfirmed or resolved");
    }
    if (tied.size() == 1) {
        return tied.front();
    }
    return tied[static_cast<std::size_t>(rng.below(tied.size()))];
}

}  // namespace

int select_goal_mlg(const KnowledgeVector& k, const GoalPrior& prior, Rng& rng, GoalConfig excluded) {
    const auto marginal = eligible_marginals(k, prior, excluded);
    double best = 0.0;
    for (double p : marginal) {
        best = std::max(best, p);
    }
    std::vector<int> tied;
    if (best > 0.0) {
        for (int i = 0; i < k.size(); ++i) {
            if (marginal[static_cast<std::size_t>(i)] >= best - kTieTolerance) {
                tied.push_back(i);
            }
        }
    }
    return pick_tied(tied, rng);
}

int select_goal_cg(StateId s, const KnowledgeVector& k, const GoalPrior& prior, const DistanceOracle& oracle,
                   Rng& rng, GoalConfig excluded) {
    const auto marginal = eligible_marginals(k, prior, excluded);
    double best = kInfinity;
    bool any = false;
    for (int i = 0; i < k.size(); ++i) {
        if (marginal[static_cast<std::size_t>(i)] > 0.0) {
            any = true;
            best = std::min(best, oracle.distance(s, i));
        }
    }
    std::vector<int> tied;
    if (any) {
        for (int i = 0; i < k.size(); ++i) {
            if (marginal[static_cast<std::size_t>(i)] <= 0.0) {
                continue;
            }
            const double d = oracle.distance(s, i);
            if (d <= best + kTieTolerance) {
                tied.push_back(i);
            }
        }
    }
    return pick_tied(tied, rng);
}

// ---------------------------------------------------------------------------
// SingleGoalSsp

SingleGoalSsp::SingleGoalSsp(std::shared_ptr<const GusspModel> model, int target)
    : Ssp(model->num_actions()), model_(std::move(model)), target_(target) {
    if (target_ < 0 || target_ >= model_->num_goals()) {
        throw GusspError(ErrorKind::InvalidModel, "determinized target out of range");
    }
    set_start(static_cast<StateKey>(model_->start()) << 1);
}

bool SingleGoalSsp::goal_key(StateKey key) const {
    if (key & 1u) {
        return true;
    }
    const auto s = static_cast<StateId>(key >> 1);
    if (model_->termination() == Termination::ReachConfirmedGoal) {
        return model_->site(s) == target_;
    }
    return model_->base_terminal(s);
}

void SingleGoalSsp::generate(StateKey key, std::vector<GeneratedRow>& rows) const {
    const auto s = static_cast<StateId>(key >> 1);
    const bool at_target = model_->site(s) == target_;
    for (ActionId a = 0; a < model_->num_actions(); ++a) {
        auto& row = rows[static_cast<std::size_t>(a)];
        const Effect* ge = at_target ? model_->goal_effect(s, a) : nullptr;
        const Effect& e = ge ? *ge : model_->effect(s, a);
        const StateKey done = ge ? 1u : 0u;
        row.cost = e.cost;
        for (const Outcome& o : e.outcomes) {
            row.outcomes.emplace_back((static_cast<StateKey>(o.next) << 1) | done, o.probability);
        }
    }
}

// ---------------------------------------------------------------------------
// DeterminizedExecutor

DeterminizedExecutor::DeterminizedExecutor(std::shared_ptr<const GusspModel> model,
                                           std::shared_ptr<const DistanceOracle> oracle, GoalSelector selector,
                                           DeterminizationOptions options)
    : model_(std::move(model)), oracle_(std::move(oracle)), selector_(selector), options_(options) {}

int DeterminizedExecutor::select(StateId s, const KnowledgeVector& k, Rng& rng, GoalConfig excluded) const {
    if (selector_ == GoalSelector::MostLikely) {
        return select_goal_mlg(k, model_->prior(), rng, excluded);
    }
    return select_goal_cg(s, k, model_->prior(), *oracle_, rng, excluded);
}

DeterminizedPlan& DeterminizedExecutor::plan(int target, StateId from) {
    auto& slot = plans_[{target, from}];
    if (!slot) {
        const auto start = Clock::now();
        auto p = std::make_unique<DeterminizedPlan>();
        p->target = target;
        p->from = from;
        p->ssp = std::make_unique<SingleGoalSsp>(model_, target);
        p->heuristic = std::make_unique<MinMinHeuristic>(*p->ssp);
        MinMinHeuristic* h = p->heuristic.get();
        p->values = std::make_unique<ValueTable>(*p->ssp, [h](NodeId x) { return (*h)(x); });
        lao_star(*p->ssp, *p->values, p->policy, p->ssp->node(from), options_.inner);
        p->planning_time = seconds_since(start);
        slot = std::move(p);
    }
    return *slot;
}

ActionId DeterminizedExecutor::action_for(DeterminizedPlan& plan, StateId s) const {
    const NodeId x = plan.ssp->find(static_cast<StateKey>(s) << 1);
    return x < 0 ? Policy::kNone : plan.policy.at(x);
}

TrialRecord DeterminizedExecutor::execute(GoalConfig g_true, std::uint64_t seed) {
    const GusspModel& m = *model_;
    TrialRecord rec;
    rec.seed = seed;
    rec.true_config = g_true;
    Rng rng(seed);
    const auto trial_start = Clock::now();

    StateId s = m.start();
    KnowledgeVector k(m.num_goals());
    GoalConfig resolved = 0;
    int target = -1;
    DeterminizedPlan* current = nullptr;
    bool first_plan = true;

    auto record = [&](ActionId a, const Observation& obs) {
        if (options_.capture_trace) {
            rec.trace.push_back({rec.steps, s, k, a, rec.cost, obs});
        }
    };

    try {
        while (!is_goal_state(m, s, k)) {
            if (rec.steps >= options_.step_budget) {
                throw GusspError(ErrorKind::StepBudgetExceeded,
                                 "trial exceeded " + std::to_string(options_.step_budget) + " steps");
            }
            if (target < 0 || k.status(target) == GoalStatus::ConfirmedNotGoal || ((resolved >> target) & 1u)) {
                if (target >= 0) {
                    ++rec.replans;
                }
                target = select(s, k, rng, resolved);
                const auto t0 = Clock::now();
                current = &plan(target, s);
                const double dt = seconds_since(t0);
                rec.planning_time += dt;
                if (first_plan) {
                    rec.first_plan_time = dt;
                    first_plan = false;
                }
            }
            ActionId a = action_for(*current, s);
            if (a == Policy::kNone) {
                // Off the cached solution graph: use (or solve) the plan rooted here.
                const auto t0 = Clock::now();
                current = &plan(target, s);
                rec.planning_time += seconds_since(t0);
                a = action_for(*current, s);
            }

            const int site = m.site(s);
            const bool site_is_goal = site >= 0 && ((g_true >> site) & 1u);
            const Effect& e = m.dynamics(s, a, site_is_goal);
            if (site == target && site_is_goal && m.goal_effect(s, a) != nullptr) {
                resolved |= GoalConfig{1} << target;
            }
            const auto& outs = e.outcomes;
            const StateId next = outs[rng.pick(outs, [](const Outcome& o) { return o.probability; })].next;
            rec.cost += e.cost;
            const Observation obs = observe(m, next, g_true);
            const KnowledgeVector before = k;
            k = apply_observation(k, obs);
            if (options_.capture_trace) {
                rec.trace.push_back({rec.steps, s, before, a, rec.cost, obs});
            }
            ++rec.steps;
            s = next;
        }
        record(-1, Observation{});
    } catch (const GusspError& err) {
        rec.failed = true;
        rec.failure = err.what();
    }
    rec.execution_time = seconds_since(trial_start) - rec.planning_time;
    return rec;
}

TrialRecord execute_determinized(std::shared_ptr<const GusspModel> model, GoalSelector selector, GoalConfig g_true,
                                 std::uint64_t seed, const DeterminizationOptions& options) {
    auto oracle = std::make_shared<const DistanceOracle>(*model);
    DeterminizedExecutor executor(std::move(model), std::move(oracle), selector, options);
    return executor.execute(g_true, seed);
}

}  // namespace gussp
