#pragma once

// Reduction of a myopic GUSSP to a finite SSP over (base state, knowledge)
// pairs. Revelation on arrival is folded into the transition step.

#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "gussp/model.hpp"
#include "gussp/ssp.hpp"

namespace gussp {

struct CompiledState {
    StateId s = 0;
    KnowledgeVector k;

    friend bool operator==(const CompiledState&, const CompiledState&) = default;
};

StateKey encode(const CompiledState& x);

inline constexpr std::size_t kDefaultStateBudget = 10'000'000;

struct CompileOptions {
    /// Enumerate the reachable compiled states and reject dead ends.
    bool verify_proper = true;
    std::size_t state_budget = kDefaultStateBudget;
};

class CompiledSsp : public Ssp {
public:
    explicit CompiledSsp(std::shared_ptr<const GusspModel> model);

    const GusspModel& model() const noexcept { return *model_; }
    std::shared_ptr<const GusspModel> model_ptr() const noexcept { return model_; }

    CompiledState state(NodeId id) const;
    CompiledState decode(StateKey key) const;
    NodeId intern_state(const CompiledState& x) { return intern(encode(x)); }

    /// Observation distribution for revealing `reveal` under k, memoized per (k, reveal).
    const std::vector<WeightedObservation>& revelation(const KnowledgeVector& k, GoalConfig reveal) const;

protected:
    bool goal_key(StateKey key) const override;
    void generate(StateKey key, std::vector<GeneratedRow>& rows) const override;

private:
    std::shared_ptr<const GusspModel> model_;
    mutable std::unordered_map<std::uint64_t, std::vector<WeightedObservation>> revelation_cache_;
};

/// Builds the compiled SSP. Throws ImproperModel when verification finds a
/// reachable state from which no policy reaches a goal with probability 1.
std::unique_ptr<CompiledSsp> compile(std::shared_ptr<const GusspModel> model, const CompileOptions& options = {});

struct ReachableSet {
    std::vector<NodeId> states;  // breadth-first order from the start
    std::size_t count() const noexcept { return states.size(); }
};

/// Closure from the start under all actions. Throws StateBudgetExceeded past `state_budget`.
ReachableSet enumerate_reachable(Ssp& ssp, std::size_t state_budget = kDefaultStateBudget);

/// States among `reachable` from which some policy reaches a goal with probability 1.
std::vector<std::uint8_t> almost_sure_goal_reachability(Ssp& ssp, const ReachableSet& reachable);

/// Throws ImproperModel if any reachable state is a dead end.
void verify_proper(Ssp& ssp, const ReachableSet& reachable);

/// One record per reachable state: `id  s  k  [a->(id,p),...]`.
void dump_compiled(std::ostream& out, CompiledSsp& ssp, const ReachableSet& reachable);

}  // namespace gussp
