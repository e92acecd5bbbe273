#include "gussp/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

namespace gussp {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidModel: return "InvalidModel";
        case ErrorKind::InvalidInstance: return "InvalidInstance";
        case ErrorKind::InconsistentKnowledge: return "InconsistentKnowledge";
        case ErrorKind::ContradictoryObservation: return "ContradictoryObservation";
        case ErrorKind::ImproperModel: return "ImproperModel";
        case ErrorKind::StateBudgetExceeded: return "StateBudgetExceeded";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::NoEligibleGoal: return "NoEligibleGoal";
        case ErrorKind::StepBudgetExceeded: return "StepBudgetExceeded";
        case ErrorKind::NonDeterministicModel: return "NonDeterministicModel";
        case ErrorKind::UnreachableVertex: return "UnreachableVertex";
        case ErrorKind::TooManyGoals: return "TooManyGoals";
    }
    return "Unknown";
}

GusspError::GusspError(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

namespace {

[[noreturn]] void fail(ErrorKind kind, const std::string& message) { throw GusspError(kind, message); }

void check_goal_count(int num_goals) {
    if (num_goals < 1) {
        fail(ErrorKind::InvalidModel, "at least one potential goal is required");
    }
    if (num_goals > kMaxPotentialGoals) {
        fail(ErrorKind::TooManyGoals, "at most " + std::to_string(kMaxPotentialGoals) +
                                          " potential goals are supported, got " + std::to_string(num_goals));
    }
}

GoalConfig full_mask(int num_goals) { return (GoalConfig{1} << num_goals) - 1; }

}  // namespace

// ---------------------------------------------------------------------------
// KnowledgeVector

KnowledgeVector::KnowledgeVector(int num_goals) : size_(num_goals) {
    if (num_goals < 0 || num_goals > kMaxPotentialGoals) {
        fail(ErrorKind::TooManyGoals, "knowledge vector size out of range");
    }
}

KnowledgeVector KnowledgeVector::from_masks(int num_goals, GoalConfig goal_mask, GoalConfig not_goal_mask) {
    KnowledgeVector k(num_goals);
    const GoalConfig all = full_mask(num_goals);
    if ((goal_mask & not_goal_mask) != 0 || (goal_mask & ~all) != 0 || (not_goal_mask & ~all) != 0) {
        fail(ErrorKind::InvalidModel, "knowledge masks overlap or exceed the goal count");
    }
    k.goal_ = goal_mask;
    k.not_goal_ = not_goal_mask;
    return k;
}

KnowledgeVector KnowledgeVector::unpack(int num_goals, std::uint32_t packed) {
    return from_masks(num_goals, packed & 0xFFFFu, packed >> 16);
}

GoalStatus KnowledgeVector::status(int index) const {
    if (index < 0 || index >= size_) {
        throw std::out_of_range("knowledge index out of range");
    }
    const GoalConfig bit = GoalConfig{1} << index;
    if (goal_ & bit) {
        return GoalStatus::ConfirmedGoal;
    }
    if (not_goal_ & bit) {
        return GoalStatus::ConfirmedNotGoal;
    }
    return GoalStatus::Unknown;
}

KnowledgeVector KnowledgeVector::with(int index, GoalStatus status) const {
    if (index < 0 || index >= size_) {
        throw std::out_of_range("knowledge index out of range");
    }
    KnowledgeVector k = *this;
    const GoalConfig bit = GoalConfig{1} << index;
    k.goal_ &= ~bit;
    k.not_goal_ &= ~bit;
    if (status == GoalStatus::ConfirmedGoal) {
        k.goal_ |= bit;
    } else if (status == GoalStatus::ConfirmedNotGoal) {
        k.not_goal_ |= bit;
    }
    return k;
}

GoalConfig KnowledgeVector::unknown_mask() const noexcept { return full_mask(size_) & ~(goal_ | not_goal_); }

int KnowledgeVector::unknown_count() const noexcept { return std::popcount(unknown_mask()); }

std::string KnowledgeVector::to_string() const {
    std::string out(static_cast<std::size_t>(size_), '?');
    for (int i = 0; i < size_; ++i) {
        const GoalConfig bit = GoalConfig{1} << i;
        if (goal_ & bit) {
            out[static_cast<std::size_t>(i)] = 'G';
        } else if (not_goal_ & bit) {
            out[static_cast<std::size_t>(i)] = 'N';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Observation

std::optional<bool> Observation::at(int index) const {
    const GoalConfig bit = GoalConfig{1} << index;
    if ((revealed & bit) == 0) {
        return std::nullopt;
    }
    return (is_goal & bit) != 0;
}

std::string Observation::to_string() const {
    if (revealed == 0) {
        return "-";
    }
    std::ostringstream out;
    bool first = true;
    for (int i = 0; i < kMaxPotentialGoals; ++i) {
        if (auto v = at(i)) {
            out << (first ? "" : ",") << i << '=' << (*v ? 'G' : 'N');
            first = false;
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// GoalPrior

GoalPrior GoalPrior::uniform(int num_goals) {
    check_goal_count(num_goals);
    GoalPrior prior;
    prior.kind_ = PriorKind::Uniform;
    prior.num_goals_ = num_goals;
    prior.finalize_support();
    return prior;
}

GoalPrior GoalPrior::explicit_table(int num_goals, std::vector<WeightedConfig> weights) {
    check_goal_count(num_goals);
    const GoalConfig all = full_mask(num_goals);
    std::sort(weights.begin(), weights.end(),
              [](const WeightedConfig& a, const WeightedConfig& b) { return a.config < b.config; });
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const auto& w = weights[i];
        if (w.config == 0 || (w.config & ~all) != 0) {
            fail(ErrorKind::InvalidModel, "prior configuration must be a nonempty subset of the potential goals");
        }
        if (i > 0 && weights[i - 1].config == w.config) {
            fail(ErrorKind::InvalidModel, "duplicate configuration in explicit prior");
        }
        if (!(w.probability >= 0.0) || !std::isfinite(w.probability)) {
            fail(ErrorKind::InvalidModel, "prior weights must be finite and nonnegative");
        }
        total += w.probability;
    }
    if (std::fabs(total - 1.0) > kProbabilityTolerance) {
        fail(ErrorKind::InvalidModel, "explicit prior sums to " + std::to_string(total) + ", expected 1");
    }
    GoalPrior prior;
    prior.kind_ = PriorKind::Explicit;
    prior.num_goals_ = num_goals;
    prior.explicit_ = std::move(weights);
    prior.finalize_support();
    return prior;
}

GoalPrior GoalPrior::independent_bernoulli(std::vector<double> marginals) {
    check_goal_count(static_cast<int>(marginals.size()));
    for (double p : marginals) {
        if (!(p > 0.0 && p <= 1.0)) {
            fail(ErrorKind::InvalidModel, "Bernoulli marginals must lie in (0, 1]");
        }
    }
    GoalPrior prior;
    prior.kind_ = PriorKind::IndependentBernoulli;
    prior.num_goals_ = static_cast<int>(marginals.size());
    prior.marginals_ = std::move(marginals);
    prior.finalize_support();
    return prior;
}

void GoalPrior::finalize_support() {
    support_.clear();
    const GoalConfig all = full_mask(num_goals_);
    switch (kind_) {
        case PriorKind::Uniform: {
            const double p = 1.0 / static_cast<double>(all);
            support_.reserve(all);
            for (GoalConfig g = 1; g <= all; ++g) {
                support_.push_back({g, p});
            }
            break;
        }
        case PriorKind::Explicit:
            for (const auto& w : explicit_) {
                if (w.probability > 0.0) {
                    support_.push_back(w);
                }
            }
            break;
        case PriorKind::IndependentBernoulli: {
            double empty = 1.0;
            for (double p : marginals_) {
                empty *= 1.0 - p;
            }
            const double norm = 1.0 - empty;
            for (GoalConfig g = 1; g <= all; ++g) {
                double w = 1.0;
                for (int i = 0; i < num_goals_; ++i) {
                    const double p = marginals_[static_cast<std::size_t>(i)];
                    w *= (g >> i & 1u) ? p : 1.0 - p;
                }
                if (w > 0.0) {
                    support_.push_back({g, w / norm});
                }
            }
            break;
        }
    }
}

double GoalPrior::mass(GoalConfig config) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), config,
                               [](const WeightedConfig& w, GoalConfig c) { return w.config < c; });
    return (it != support_.end() && it->config == config) ? it->probability : 0.0;
}

// ---------------------------------------------------------------------------
// GusspModel

GusspModel::GusspModel(ModelDescription description) : d_(std::move(description)) {
    const auto n = static_cast<std::size_t>(d_.num_states);
    if (d_.goal_site.empty()) {
        d_.goal_site.assign(n, -1);
        for (std::size_t i = 0; i < d_.potential_goals.size(); ++i) {
            const StateId s = d_.potential_goals[i];
            if (s >= 0 && static_cast<std::size_t>(s) < n) {
                if (d_.goal_site[static_cast<std::size_t>(s)] != -1) {
                    fail(ErrorKind::InvalidModel, "potential goals must be distinct states");
                }
                d_.goal_site[static_cast<std::size_t>(s)] = static_cast<int>(i);
            }
        }
    }
    if (d_.terminal.empty()) {
        d_.terminal.assign(n, 0);
    }
    validate();
}

void GusspModel::validate() const {
    if (d_.num_states <= 0 || d_.num_actions <= 0) {
        fail(ErrorKind::InvalidModel, "model needs at least one state and one action");
    }
    const auto n = static_cast<std::size_t>(d_.num_states);
    const auto a = static_cast<std::size_t>(d_.num_actions);
    if (d_.effects.size() != n * a) {
        fail(ErrorKind::InvalidModel, "effects table must hold num_states * num_actions rows");
    }
    auto check_effect = [&](const Effect& e, std::size_t row) {
        if (!(e.cost >= 0.0) || !std::isfinite(e.cost)) {
            fail(ErrorKind::InvalidModel, "negative or non-finite cost in row " + std::to_string(row));
        }
        if (e.outcomes.empty()) {
            fail(ErrorKind::InvalidModel, "empty transition row " + std::to_string(row));
        }
        double total = 0.0;
        for (const auto& o : e.outcomes) {
            if (o.next < 0 || static_cast<std::size_t>(o.next) >= n) {
                fail(ErrorKind::InvalidModel, "successor out of range in row " + std::to_string(row));
            }
            if (!(o.probability > 0.0)) {
                fail(ErrorKind::InvalidModel, "outcome probabilities must be positive");
            }
            total += o.probability;
        }
        if (std::fabs(total - 1.0) > kProbabilityTolerance) {
            fail(ErrorKind::InvalidModel, "transition row " + std::to_string(row) + " sums to " + std::to_string(total));
        }
    };
    for (std::size_t row = 0; row < d_.effects.size(); ++row) {
        check_effect(d_.effects[row], row);
    }
    for (const auto& [row, e] : d_.goal_effects) {
        if (row < 0 || static_cast<std::size_t>(row) >= n * a) {
            fail(ErrorKind::InvalidModel, "goal effect row out of range");
        }
        check_effect(e, static_cast<std::size_t>(row));
    }
    if (d_.start < 0 || static_cast<std::size_t>(d_.start) >= n) {
        fail(ErrorKind::InvalidModel, "start state out of range");
    }
    const int goals = static_cast<int>(d_.potential_goals.size());
    check_goal_count(goals);
    if (d_.prior.num_goals() != goals) {
        fail(ErrorKind::InvalidModel, "prior is defined over a different number of potential goals");
    }
    if (d_.goal_site.size() != n || d_.terminal.size() != n) {
        fail(ErrorKind::InvalidModel, "per-state tables must have num_states entries");
    }
    for (int i = 0; i < goals; ++i) {
        const StateId s = d_.potential_goals[static_cast<std::size_t>(i)];
        if (s < 0 || static_cast<std::size_t>(s) >= n || d_.goal_site[static_cast<std::size_t>(s)] != i) {
            fail(ErrorKind::InvalidModel, "potential goal " + std::to_string(i) + " is not a distinct in-range site");
        }
    }
    for (int site : d_.goal_site) {
        if (site < -1 || site >= goals) {
            fail(ErrorKind::InvalidModel, "goal site index out of range");
        }
    }
    for (const auto& [row, e] : d_.goal_effects) {
        (void)e;
        if (d_.goal_site[static_cast<std::size_t>(row) / a] < 0) {
            fail(ErrorKind::InvalidModel, "goal effects may only be attached to potential-goal states");
        }
    }
    if (!d_.landmark_vicinity.empty()) {
        if (d_.landmark_vicinity.size() != n) {
            fail(ErrorKind::InvalidModel, "landmark table must have num_states entries");
        }
        for (GoalConfig v : d_.landmark_vicinity) {
            if ((v & ~full_mask(goals)) != 0) {
                fail(ErrorKind::InvalidModel, "landmark vicinity must be a subset of the potential goals");
            }
        }
    }
    if (informative(d_.start)) {
        fail(ErrorKind::InvalidModel, "the start state must not be a potential goal or landmark");
    }
    if (d_.true_goal_set_oracle) {
        const GoalConfig g = *d_.true_goal_set_oracle;
        if (g == 0 || (g & ~full_mask(goals)) != 0) {
            fail(ErrorKind::InvalidModel, "true goal set must be a nonempty subset of the potential goals");
        }
        if (!(d_.prior.mass(g) > 0.0)) {
            fail(ErrorKind::InvalidModel, "true goal set has zero prior mass");
        }
    }
    if (!d_.action_names.empty() && d_.action_names.size() != a) {
        fail(ErrorKind::InvalidModel, "action_names must name every action");
    }
}

const Effect& GusspModel::effect(StateId s, ActionId a) const {
    return d_.effects[static_cast<std::size_t>(s) * static_cast<std::size_t>(d_.num_actions) +
                      static_cast<std::size_t>(a)];
}

const Effect* GusspModel::goal_effect(StateId s, ActionId a) const {
    if (d_.goal_effects.empty()) {
        return nullptr;
    }
    auto it = d_.goal_effects.find(static_cast<std::int64_t>(s) * d_.num_actions + a);
    return it == d_.goal_effects.end() ? nullptr : &it->second;
}

const Effect& GusspModel::dynamics(StateId s, ActionId a, bool site_is_goal) const {
    if (site_is_goal) {
        if (const Effect* e = goal_effect(s, a)) {
            return *e;
        }
    }
    return effect(s, a);
}

bool GusspModel::has_landmarks() const noexcept {
    return std::any_of(d_.landmark_vicinity.begin(), d_.landmark_vicinity.end(), [](GoalConfig v) { return v != 0; });
}

GoalConfig GusspModel::reveal_mask(StateId s) const {
    GoalConfig mask = vicinity(s);
    const int i = site(s);
    if (i >= 0) {
        mask |= GoalConfig{1} << i;
    }
    return mask;
}

bool GusspModel::base_terminal(StateId s) const { return d_.terminal[static_cast<std::size_t>(s)] != 0; }

bool GusspModel::deterministic() const {
    auto single = [](const Effect& e) { return e.outcomes.size() == 1; };
    return std::all_of(d_.effects.begin(), d_.effects.end(), single) &&
           std::all_of(d_.goal_effects.begin(), d_.goal_effects.end(), [&](const auto& kv) { return single(kv.second); });
}

std::string GusspModel::action_name(ActionId a) const {
    if (!d_.action_names.empty()) {
        return d_.action_names[static_cast<std::size_t>(a)];
    }
    return "a" + std::to_string(a);
}

std::string GusspModel::state_label(StateId s) const {
    if (d_.state_label) {
        return d_.state_label(s);
    }
    return std::to_string(s);
}

// ---------------------------------------------------------------------------
// Knowledge / belief operations

bool is_goal_state(const GusspModel& model, StateId s, const KnowledgeVector& k) {
    if (model.termination() == Termination::BaseTerminal) {
        return model.base_terminal(s);
    }
    const int i = model.site(s);
    return i >= 0 && k.status(i) == GoalStatus::ConfirmedGoal;
}

std::vector<WeightedConfig> posterior_config(const GoalPrior& prior, const KnowledgeVector& k) {
    std::vector<WeightedConfig> out;
    double total = 0.0;
    for (const auto& w : prior.support()) {
        if (k.consistent_with(w.config)) {
            out.push_back(w);
            total += w.probability;
        }
    }
    if (out.empty() || !(total > 0.0)) {
        throw GusspError(ErrorKind::InconsistentKnowledge,
                         "no configuration with positive prior mass is consistent with " + k.to_string());
    }
    for (auto& w : out) {
        w.probability /= total;
    }
    return out;
}

double marginal_is_goal(const GoalPrior& prior, const KnowledgeVector& k, int index) {
    const auto posterior = posterior_config(prior, k);
    switch (k.status(index)) {
        case GoalStatus::ConfirmedGoal: return 1.0;
        case GoalStatus::ConfirmedNotGoal: return 0.0;
        case GoalStatus::Unknown: break;
    }
    const GoalConfig bit = GoalConfig{1} << index;
    double p = 0.0;
    for (const auto& w : posterior) {
        if (w.config & bit) {
            p += w.probability;
        }
    }
    return p;
}

Observation observe(const GusspModel& model, StateId s_arrived, GoalConfig g_true) {
    const GoalConfig reveal = model.reveal_mask(s_arrived);
    return Observation{reveal, reveal & g_true};
}

KnowledgeVector apply_observation(const KnowledgeVector& k, const Observation& obs) {
    const GoalConfig goals = obs.revealed & obs.is_goal;
    const GoalConfig not_goals = obs.revealed & ~obs.is_goal;
    if ((goals & k.not_goal_mask()) != 0 || (not_goals & k.goal_mask()) != 0) {
        throw GusspError(ErrorKind::ContradictoryObservation,
                         "observation " + obs.to_string() + " contradicts knowledge " + k.to_string());
    }
    return KnowledgeVector::from_masks(k.size(), k.goal_mask() | goals, k.not_goal_mask() | not_goals);
}

std::vector<WeightedObservation> observation_distribution(const GoalPrior& prior, const KnowledgeVector& k,
                                                          GoalConfig reveal) {
    const GoalConfig open = reveal & k.unknown_mask();
    const GoalConfig known_goals = reveal & k.goal_mask();
    std::map<GoalConfig, double> by_pattern;
    double total = 0.0;
    for (const auto& w : prior.support()) {
        if (!k.consistent_with(w.config)) {
            continue;
        }
        by_pattern[w.config & open] += w.probability;
        total += w.probability;
    }
    if (!(total > 0.0)) {
        throw GusspError(ErrorKind::InconsistentKnowledge,
                         "no configuration with positive prior mass is consistent with " + k.to_string());
    }
    std::vector<WeightedObservation> out;
    out.reserve(by_pattern.size());
    for (const auto& [pattern, mass] : by_pattern) {
        if (mass > 0.0) {
            out.push_back({Observation{reveal, known_goals | pattern}, mass / total});
        }
    }
    return out;
}

}  // namespace gussp
