#pragma once

// Goal-uncertain SSP model: base dynamics, potential goals, landmarks,
// goal-configuration priors and the myopic knowledge update.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace gussp {

using StateId = std::int32_t;
using ActionId = std::int32_t;

/// Bitmask over potential-goal indices. A goal configuration is a nonempty mask.
using GoalConfig = std::uint32_t;

inline constexpr int kMaxPotentialGoals = 16;
inline constexpr double kProbabilityTolerance = 1e-9;

enum class ErrorKind {
    InvalidModel,
    InvalidInstance,
    InconsistentKnowledge,
    ContradictoryObservation,
    ImproperModel,
    StateBudgetExceeded,
    NonConvergence,
    NoEligibleGoal,
    StepBudgetExceeded,
    NonDeterministicModel,
    UnreachableVertex,
    TooManyGoals,
};

const char* to_string(ErrorKind kind) noexcept;

class GusspError : public std::runtime_error {
public:
    GusspError(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

enum class GoalStatus : std::uint8_t { Unknown, ConfirmedGoal, ConfirmedNotGoal };

/// Per-potential-goal knowledge. Stored as two disjoint masks; the whole
/// vector packs into 32 bits.
class KnowledgeVector {
public:
    KnowledgeVector() = default;
    explicit KnowledgeVector(int num_goals);
    static KnowledgeVector from_masks(int num_goals, GoalConfig goal_mask, GoalConfig not_goal_mask);

    int size() const noexcept { return size_; }
    GoalStatus status(int index) const;
    KnowledgeVector with(int index, GoalStatus status) const;

    GoalConfig goal_mask() const noexcept { return goal_; }
    GoalConfig not_goal_mask() const noexcept { return not_goal_; }
    GoalConfig unknown_mask() const noexcept;
    int unknown_count() const noexcept;

    /// Every ConfirmedGoal index is in `config` and no ConfirmedNotGoal index is.
    bool consistent_with(GoalConfig config) const noexcept {
        return (config & goal_) == goal_ && (config & not_goal_) == 0;
    }

    std::uint32_t packed() const noexcept { return goal_ | (not_goal_ << 16); }
    static KnowledgeVector unpack(int num_goals, std::uint32_t packed);

    /// One character per goal: '?' unknown, 'G' confirmed goal, 'N' confirmed not-goal.
    std::string to_string() const;

    friend bool operator==(const KnowledgeVector&, const KnowledgeVector&) = default;

private:
    int size_ = 0;
    GoalConfig goal_ = 0;
    GoalConfig not_goal_ = 0;
};

/// Partial assignment of goal membership revealed on arrival at a state.
struct Observation {
    GoalConfig revealed = 0;  // indices covered by the observation
    GoalConfig is_goal = 0;   // subset of `revealed` observed to be goals

    bool empty() const noexcept { return revealed == 0; }
    std::optional<bool> at(int index) const;
    std::string to_string() const;

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct WeightedConfig {
    GoalConfig config;
    double probability;
};

enum class PriorKind { Uniform, Explicit, IndependentBernoulli };

/// Distribution over nonempty goal configurations. The positive-mass support
/// is materialized at construction in ascending mask order.
class GoalPrior {
public:
    GoalPrior() = default;

    static GoalPrior uniform(int num_goals);
    static GoalPrior explicit_table(int num_goals, std::vector<WeightedConfig> weights);
    /// Independent per-goal marginals in (0, 1], conditioned on a nonempty configuration.
    static GoalPrior independent_bernoulli(std::vector<double> marginals);

    PriorKind kind() const noexcept { return kind_; }
    int num_goals() const noexcept { return num_goals_; }
    const std::vector<WeightedConfig>& explicit_weights() const noexcept { return explicit_; }
    const std::vector<double>& bernoulli_marginals() const noexcept { return marginals_; }

    std::span<const WeightedConfig> support() const noexcept { return support_; }
    double mass(GoalConfig config) const;

private:
    void finalize_support();

    PriorKind kind_ = PriorKind::Uniform;
    int num_goals_ = 0;
    std::vector<WeightedConfig> explicit_;
    std::vector<double> marginals_;
    std::vector<WeightedConfig> support_;
};

struct Outcome {
    StateId next;
    double probability;
};

struct Effect {
    double cost = 0.0;
    std::vector<Outcome> outcomes;
};

enum class Termination {
    ReachConfirmedGoal,  // at s with s's site confirmed a goal
    BaseTerminal,        // at a state flagged terminal in the base model
};

/// Plain description consumed by GusspModel's validating constructor.
struct ModelDescription {
    int num_states = 0;
    int num_actions = 0;
    /// Row-major [state * num_actions + action].
    std::vector<Effect> effects;
    /// Alternate dynamics applied when the acting state's site is ConfirmedGoal.
    std::unordered_map<std::int64_t, Effect> goal_effects;
    StateId start = 0;
    /// Representative base state of each potential goal.
    std::vector<StateId> potential_goals;
    /// Potential-goal index per base state, or -1. Derived from potential_goals when empty.
    std::vector<int> goal_site;
    /// Landmark vicinity mask per base state (0 = not a landmark). May be empty.
    std::vector<GoalConfig> landmark_vicinity;
    GoalPrior prior;
    Termination termination = Termination::ReachConfirmedGoal;
    std::vector<std::uint8_t> terminal;
    std::optional<GoalConfig> true_goal_set_oracle;
    std::vector<std::string> action_names;
    std::function<std::string(StateId)> state_label;
};

class GusspModel {
public:
    explicit GusspModel(ModelDescription description);

    int num_states() const noexcept { return d_.num_states; }
    int num_actions() const noexcept { return d_.num_actions; }
    int num_goals() const noexcept { return static_cast<int>(d_.potential_goals.size()); }
    StateId start() const noexcept { return d_.start; }

    const Effect& effect(StateId s, ActionId a) const;
    /// nullptr when (s, a) has no goal-conditioned effect.
    const Effect* goal_effect(StateId s, ActionId a) const;
    /// Dynamics actually in force given whether s's site is a goal.
    const Effect& dynamics(StateId s, ActionId a, bool site_is_goal) const;
    bool has_goal_effects() const noexcept { return !d_.goal_effects.empty(); }

    std::span<const StateId> potential_goals() const noexcept { return d_.potential_goals; }
    int site(StateId s) const { return d_.goal_site[static_cast<std::size_t>(s)]; }
    GoalConfig vicinity(StateId s) const {
        return d_.landmark_vicinity.empty() ? 0 : d_.landmark_vicinity[static_cast<std::size_t>(s)];
    }
    bool has_landmarks() const noexcept;
    /// Mask of indices revealed on arrival at s.
    GoalConfig reveal_mask(StateId s) const;
    bool informative(StateId s) const { return reveal_mask(s) != 0; }

    const GoalPrior& prior() const noexcept { return d_.prior; }
    Termination termination() const noexcept { return d_.termination; }
    bool base_terminal(StateId s) const;
    const std::optional<GoalConfig>& true_goal_set_oracle() const noexcept { return d_.true_goal_set_oracle; }

    /// Every row (including goal effects) is a single outcome with probability 1.
    bool deterministic() const;

    std::string action_name(ActionId a) const;
    std::string state_label(StateId s) const;

private:
    void validate() const;

    ModelDescription d_;
};

/// Termination test on (base state, knowledge).
bool is_goal_state(const GusspModel& model, StateId s, const KnowledgeVector& k);

/// b(g | k) proportional to prior(g) restricted to configurations consistent with k.
std::vector<WeightedConfig> posterior_config(const GoalPrior& prior, const KnowledgeVector& k);

/// Posterior probability that potential goal `index` belongs to the true configuration.
double marginal_is_goal(const GoalPrior& prior, const KnowledgeVector& k, int index);

/// Myopic observation on arrival at `s_arrived` when the true configuration is `g_true`.
Observation observe(const GusspModel& model, StateId s_arrived, GoalConfig g_true);

KnowledgeVector apply_observation(const KnowledgeVector& k, const Observation& obs);

struct WeightedObservation {
    Observation observation;
    double probability;
};

/// Distribution of the observation produced by revealing `reveal` under knowledge k.
/// Only patterns with positive posterior mass are returned, in ascending is_goal order.
std::vector<WeightedObservation> observation_distribution(const GoalPrior& prior, const KnowledgeVector& k,
                                                          GoalConfig reveal);

}  // namespace gussp
