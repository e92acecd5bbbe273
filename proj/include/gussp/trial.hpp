#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gussp/model.hpp"

namespace gussp {

/// One executed step: the state and knowledge before acting, the action, the
/// accumulated cost after it, and the observation received on arrival.
/// The final record of a finished trial carries action -1.
struct TraceStep {
    std::size_t step = 0;
    StateId state = 0;
    KnowledgeVector knowledge;
    ActionId action = -1;
    double cost_so_far = 0.0;
    Observation observation;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    GoalConfig true_config = 0;
    double cost = 0.0;
    std::size_t steps = 0;
    std::size_t replans = 0;
    /// Seconds spent planning during this trial: inner solves (determinization),
    /// FLARES replanning from unlabeled states, zero for VI and LAO*.
    double planning_time = 0.0;
    double first_plan_time = 0.0;
    double execution_time = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<TraceStep> trace;
};

}  // namespace gussp
