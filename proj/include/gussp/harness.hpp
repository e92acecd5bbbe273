#pragma once

// Benchmark cells: solve or replan, execute seeded Monte-Carlo trials against
// sampled true goal configurations, and report Table-style aggregates.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gussp/domains.hpp"
#include "gussp/rng.hpp"
#include "gussp/solvers.hpp"
#include "gussp/trial.hpp"

namespace gussp {

enum class Algorithm { Vi, Lao, Flares, DetMlg, DetCg };
enum class HeuristicKind { Zero, Hmin, Hpg };

const char* to_string(Algorithm a) noexcept;
const char* to_string(HeuristicKind h) noexcept;
/// Throws std::invalid_argument on an unknown name.
Algorithm parse_algorithm(const std::string& name);
HeuristicKind parse_heuristic(const std::string& name);

bool is_determinization(Algorithm a) noexcept;

/// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnv = "GUSSP_THREADS";

struct CellConfig {
    Algorithm algorithm = Algorithm::Lao;
    HeuristicKind heuristic = HeuristicKind::Hpg;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    int flares_horizon = 1;
    /// Non-positive selects the default: 1e-6 for vi/lao/det, 1e-3 for flares.
    double epsilon = 0.0;
    std::size_t state_budget = 10'000'000;
    std::size_t step_budget = 100'000;
    bool capture_traces = false;
    /// Worker threads for det-* trials; 0 reads GUSSP_THREADS (default 1).
    unsigned threads = 0;
    /// Per-iteration convergence callback (vi sweeps, lao iterations).
    ConvergenceCallback on_iteration;
};

double effective_epsilon(const CellConfig& config) noexcept;

struct BenchmarkReport {
    Algorithm algorithm = Algorithm::Lao;
    HeuristicKind heuristic = HeuristicKind::Hpg;
    int flares_horizon = 1;
    double epsilon = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::string digest;

    /// Planner's value estimate at the start; NaN for determinization.
    double start_value = 0.0;
    double mean_cost = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(N) over successful trials
    std::size_t failed = 0;
    double mean_steps = 0.0;
    double mean_replans = 0.0;
    std::size_t expanded = 0;
    bool budget_exhausted = false;
    /// Offline solve time for vi/lao; offline solve plus mean per-trial
    /// replanning for flares; mean per-trial planning time for det-*.
    double planning_time = 0.0;
    /// Mean time of the first plan of each trial (det-*); equals planning_time for planners.
    double first_plan_time = 0.0;

    std::vector<TrialRecord> records;
};

/// Samples a goal configuration from the prior.
GoalConfig sample_configuration(const GoalPrior& prior, Rng& rng);

/// Seed of trial `index` in a cell; also drives the trial's configuration draw.
std::uint64_t trial_seed(std::uint64_t cell_seed, std::size_t index) noexcept;

/// Runs one (algorithm, heuristic) cell. Solver failures (non-convergence,
/// budget, improper model) propagate as GusspError; execution failures are
/// counted per trial.
BenchmarkReport run_cell(std::shared_ptr<const GusspModel> model, const CellConfig& config,
                         const std::string& digest = "");

/// FNV-1a over the serialized instance, as 16 hex digits.
std::string instance_digest(const Instance& instance);

void write_report_header(std::ostream& out, bool timing);
void write_report_row(std::ostream& out, const BenchmarkReport& report, bool timing);
void write_trials_csv(std::ostream& out, const BenchmarkReport& report, bool timing);
/// Aligned text table, one row per report.
void write_pretty(std::ostream& out, const std::vector<BenchmarkReport>& reports, bool timing);

/// Header line then one line per step: step state knowledge action cost observation.
void emit_trace(std::ostream& out, const GusspModel& model, const TrialRecord& record);

}  // namespace gussp
