#include "gussp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gussp/compiler.hpp"
#include "gussp/determinization.hpp"
#include "gussp/heuristics.hpp"

namespace gussp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv(kThreadsEnv)) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<unsigned>(v);
        }
    }
    return 1;
}

// With a replanner (FLARES), unlabeled states reached during execution resume
// the solver from that state before acting.
TrialRecord execute_policy(CompiledSsp& ssp, ValueTable& values, const Policy& policy, GoalConfig g_true,
                           std::uint64_t seed, const CellConfig& config, FlaresPlanner* replanner = nullptr) {
    const GusspModel& m = ssp.model();
    TrialRecord rec;
    rec.seed = seed;
    rec.true_config = g_true;
    Rng rng(seed);
    const auto start = Clock::now();
    StateId s = m.start();
    KnowledgeVector k(m.num_goals());
    try {
        while (!is_goal_state(m, s, k)) {
            if (rec.steps >= config.step_budget) {
                throw GusspError(ErrorKind::StepBudgetExceeded,
                                 "trial exceeded " + std::to_string(config.step_budget) + " steps");
            }
            const NodeId x = ssp.intern_state({s, k});
            if (replanner && !replanner->labeled(x)) {
                const auto t = Clock::now();
                replanner->solve(x);
                rec.planning_time += seconds_since(t);
                ++rec.replans;
            }
            ActionId a = policy.at(x);
            if (a == Policy::kNone) {
                a = greedy_action(ssp, values, x);
            }
            const int site = m.site(s);
            const Effect& e = m.dynamics(s, a, site >= 0 && ((g_true >> site) & 1u));
            const StateId next = e.outcomes[rng.pick(e.outcomes, [](const Outcome& o) { return o.probability; })].next;
            rec.cost += e.cost;
            const Observation obs = observe(m, next, g_true);
            if (config.capture_traces) {
                rec.trace.push_back({rec.steps, s, k, a, rec.cost, obs});
            }
            k = apply_observation(k, obs);
            ++rec.steps;
            s = next;
        }
        if (config.capture_traces) {
            rec.trace.push_back({rec.steps, s, k, -1, rec.cost, Observation{}});
        }
    } catch (const GusspError& err) {
        rec.failed = true;
        rec.failure = err.what();
    }
    rec.execution_time = seconds_since(start);
    return rec;
}

void summarize(BenchmarkReport& report) {
    std::size_t ok = 0;
    double sum = 0.0;
    double steps = 0.0;
    double replans = 0.0;
    for (const auto& r : report.records) {
        if (r.failed) {
            ++report.failed;
            continue;
        }
        ++ok;
        sum += r.cost;
        steps += static_cast<double>(r.steps);
        replans += static_cast<double>(r.replans);
    }
    if (ok == 0) {
        report.mean_cost = std::numeric_limits<double>::quiet_NaN();
        report.std_error = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    const double n = static_cast<double>(ok);
    report.mean_cost = sum / n;
    report.mean_steps = steps / n;
    report.mean_replans = replans / n;
    double ss = 0.0;
    for (const auto& r : report.records) {
        if (!r.failed) {
            ss += (r.cost - report.mean_cost) * (r.cost - report.mean_cost);
        }
    }
    report.std_error = ok > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
}

GoalConfig true_configuration(const GusspModel& model, std::uint64_t trial_seed) {
    if (model.true_goal_set_oracle()) {
        return *model.true_goal_set_oracle();
    }
    Rng draw(mix_seed(trial_seed));
    return sample_configuration(model.prior(), draw);
}

// Offline solve from the start, then replanning from unlabeled states during
// the trials. Trials share one planner and run in index order.
void run_flares(CompiledSsp& ssp, const Heuristic& h, double eps, Clock::time_point t0,
                const std::shared_ptr<const GusspModel>& model, const CellConfig& config, BenchmarkReport& report) {
    FlaresPlanner planner(ssp, h, {.horizon = config.flares_horizon, .epsilon = eps, .seed = config.seed});
    SolveStats stats = planner.solve(ssp.start());
    report.first_plan_time = seconds_since(t0);
    report.start_value = planner.values().get(ssp.start());

    double replanning = 0.0;
    report.records.reserve(config.trials);
    for (std::size_t i = 0; i < config.trials; ++i) {
        const std::uint64_t seed = trial_seed(config.seed, i);
        TrialRecord rec = execute_policy(ssp, planner.values(), planner.policy(), true_configuration(*model, seed),
                                         seed, config, &planner);
        replanning += rec.planning_time;
        report.records.push_back(std::move(rec));
    }
    stats = planner.stats();
    report.planning_time =
        report.first_plan_time + (config.trials > 0 ? replanning / static_cast<double>(config.trials) : 0.0);
    report.expanded = stats.expanded;
    report.budget_exhausted = stats.budget_exhausted;
}

void run_planner(std::shared_ptr<const GusspModel> model, const CellConfig& config, BenchmarkReport& report) {
    const bool eager = config.algorithm != Algorithm::Flares;
    auto ssp = compile(model, {.verify_proper = eager, .state_budget = config.state_budget});

    const auto t0 = Clock::now();
    std::shared_ptr<DistanceOracle> oracle;
    std::shared_ptr<HpgHeuristic> hpg;
    std::shared_ptr<MinMinHeuristic> hmin;
    Heuristic h = zero_heuristic();
    if (config.algorithm != Algorithm::Vi) {
        if (config.heuristic == HeuristicKind::Hpg) {
            oracle = std::make_shared<DistanceOracle>(*model);
            hpg = std::make_shared<HpgHeuristic>(*ssp, *oracle);
            h = [hpg](NodeId x) { return (*hpg)(x); };
        } else if (config.heuristic == HeuristicKind::Hmin) {
            hmin = std::make_shared<MinMinHeuristic>(*ssp);
            h = [hmin](NodeId x) { return (*hmin)(x); };
        }
    }
    const double eps = effective_epsilon(config);
    if (config.algorithm == Algorithm::Flares) {
        run_flares(*ssp, h, eps, t0, model, config, report);
        return;
    }
    std::optional<SolveResult> result;
    switch (config.algorithm) {
        case Algorithm::Vi: {
            ViOptions vi;
            vi.epsilon = eps;
            vi.state_budget = config.state_budget;
            vi.on_sweep = config.on_iteration;
            result.emplace(value_iteration(*ssp, vi));
            break;
        }
        default:
            result.emplace(lao_star(*ssp, h, {.epsilon = eps, .on_iteration = config.on_iteration}));
            break;
    }
    report.planning_time = seconds_since(t0);
    report.first_plan_time = report.planning_time;
    report.expanded = result->stats.expanded;
    report.budget_exhausted = result->stats.budget_exhausted;
    report.start_value = result->values.get(ssp->start());

    report.records.reserve(config.trials);
    for (std::size_t i = 0; i < config.trials; ++i) {
        const std::uint64_t seed = trial_seed(config.seed, i);
        report.records.push_back(
            execute_policy(*ssp, result->values, result->policy, true_configuration(*model, seed), seed, config));
    }
}

void run_determinization(std::shared_ptr<const GusspModel> model, const CellConfig& config, BenchmarkReport& report) {
    const auto t0 = Clock::now();
    const GoalSelector selector =
        config.algorithm == Algorithm::DetMlg ? GoalSelector::MostLikely : GoalSelector::Closest;
    auto oracle = selector == GoalSelector::Closest ? std::make_shared<const DistanceOracle>(*model)
                                                    : std::make_shared<const DistanceOracle>();
    const double oracle_time = seconds_since(t0);

    DeterminizationOptions options;
    options.step_budget = config.step_budget;
    options.inner.epsilon = effective_epsilon(config);
    options.capture_trace = config.capture_traces;

    const std::size_t n = config.trials;
    const auto workers =
        static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(config.threads), n)));
    std::vector<std::unique_ptr<DeterminizedExecutor>> executors;
    for (unsigned w = 0; w < workers; ++w) {
        executors.push_back(std::make_unique<DeterminizedExecutor>(model, oracle, selector, options));
    }
    report.records.resize(n);
    auto work = [&](unsigned w) {
        const std::size_t begin = n * w / workers;
        const std::size_t end = n * (w + 1) / workers;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t seed = trial_seed(config.seed, i);
            GoalConfig g = 0;
            if (model->true_goal_set_oracle()) {
                g = *model->true_goal_set_oracle();
            } else {
                Rng draw(mix_seed(seed));
                g = sample_configuration(model->prior(), draw);
            }
            report.records[i] = executors[w]->execute(g, seed);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    std::map<DeterminizedExecutor::PlanKey, std::size_t> expanded;
    for (const auto& ex : executors) {
        for (const auto& [key, plan] : ex->plans()) {
            expanded.emplace(key, plan->ssp->num_expanded());
        }
    }
    for (const auto& [key, count] : expanded) {
        report.expanded += count;
    }
    double plan_sum = 0.0;
    double first_sum = 0.0;
    for (const auto& r : report.records) {
        plan_sum += r.planning_time;
        first_sum += r.first_plan_time;
    }
    const double denom = n > 0 ? static_cast<double>(n) : 1.0;
    report.planning_time = oracle_time + plan_sum / denom;
    report.first_plan_time = oracle_time + first_sum / denom;
    report.start_value = std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

const char* to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::Vi: return "vi";
        case Algorithm::Lao: return "lao";
        case Algorithm::Flares: return "flares";
        case Algorithm::DetMlg: return "det-mlg";
        case Algorithm::DetCg: return "det-cg";
    }
    return "unknown";
}

const char* to_string(HeuristicKind h) noexcept {
    switch (h) {
        case HeuristicKind::Zero: return "zero";
        case HeuristicKind::Hmin: return "hmin";
        case HeuristicKind::Hpg: return "hpg";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    for (Algorithm a : {Algorithm::Vi, Algorithm::Lao, Algorithm::Flares, Algorithm::DetMlg, Algorithm::DetCg}) {
        if (name == to_string(a)) {
            return a;
        }
    }
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

HeuristicKind parse_heuristic(const std::string& name) {
    for (HeuristicKind h : {HeuristicKind::Zero, HeuristicKind::Hmin, HeuristicKind::Hpg}) {
        if (name == to_string(h)) {
            return h;
        }
    }
    throw std::invalid_argument("unknown heuristic '" + name + "'");
}

bool is_determinization(Algorithm a) noexcept { return a == Algorithm::DetMlg || a == Algorithm::DetCg; }

double effective_epsilon(const CellConfig& config) noexcept {
    if (config.epsilon > 0.0) {
        return config.epsilon;
    }
    return config.algorithm == Algorithm::Flares ? 1e-3 : 1e-6;
}

GoalConfig sample_configuration(const GoalPrior& prior, Rng& rng) {
    const auto support = prior.support();
    return support[rng.pick(support, [](const WeightedConfig& w) { return w.probability; })].config;
}

std::uint64_t trial_seed(std::uint64_t cell_seed, std::size_t index) noexcept {
    return derive_seed(cell_seed, static_cast<std::uint64_t>(index));
}

BenchmarkReport run_cell(std::shared_ptr<const GusspModel> model, const CellConfig& config, const std::string& digest) {
    BenchmarkReport report;
    report.algorithm = config.algorithm;
    report.heuristic = config.heuristic;
    report.flares_horizon = config.flares_horizon;
    report.epsilon = effective_epsilon(config);
    report.trials = config.trials;
    report.seed = config.seed;
    report.digest = digest;
    if (is_determinization(config.algorithm)) {
        run_determinization(std::move(model), config, report);
    } else {
        run_planner(std::move(model), config, report);
    }
    summarize(report);
    return report;
}

std::string instance_digest(const Instance& instance) {
    std::ostringstream text;
    write_instance(text, instance);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text.str()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Output

void write_report_header(std::ostream& out, bool timing) {
    out << "algorithm,heuristic,horizon,epsilon,trials,seed,digest,start_value,mean_cost,stderr,failed,"
           "mean_steps,mean_replans,expanded,budget_exhausted";
    if (timing) {
        out << ",planning_time,first_plan_time";
    }
    out << '\n';
}

void write_report_row(std::ostream& out, const BenchmarkReport& r, bool timing) {
    out << to_string(r.algorithm) << ',' << to_string(r.heuristic) << ',' << r.flares_horizon << ','
        << num(r.epsilon) << ',' << r.trials << ',' << r.seed << ',' << r.digest << ',' << num(r.start_value) << ','
        << num(r.mean_cost) << ',' << num(r.std_error) << ',' << r.failed << ',' << num(r.mean_steps) << ','
        << num(r.mean_replans) << ',' << r.expanded << ',' << (r.budget_exhausted ? 1 : 0);
    if (timing) {
        out << ',' << num(r.planning_time) << ',' << num(r.first_plan_time);
    }
    out << '\n';
}

void write_trials_csv(std::ostream& out, const BenchmarkReport& report, bool timing) {
    out << "trial,seed,config,cost,steps,replans,failed";
    if (timing) {
        out << ",plan_time";
    }
    out << '\n';
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        const auto& r = report.records[i];
        out << i << ',' << r.seed << ',' << r.true_config << ',' << num(r.cost) << ',' << r.steps << ','
            << r.replans << ',' << (r.failed ? 1 : 0);
        if (timing) {
            out << ',' << num(r.planning_time);
        }
        out << '\n';
    }
}

void write_pretty(std::ostream& out, const std::vector<BenchmarkReport>& reports, bool timing) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"algorithm", "heuristic", "cost", "+/-", "failed", "expanded"};
    if (timing) {
        head.push_back("time(s)");
    }
    rows.push_back(head);
    for (const auto& r : reports) {
        std::string name = to_string(r.algorithm);
        if (r.algorithm == Algorithm::Flares) {
            name += "(" + (r.flares_horizon < 0 ? std::string("inf") : std::to_string(r.flares_horizon)) + ")";
        }
        const bool uses_h = r.algorithm == Algorithm::Lao || r.algorithm == Algorithm::Flares;
        std::vector<std::string> row = {name, uses_h ? to_string(r.heuristic) : "-", fixed(r.mean_cost, 2),
                                        fixed(r.std_error, 2), std::to_string(r.failed), std::to_string(r.expanded)};
        if (timing) {
            row.push_back(fixed(r.planning_time, 3));
        }
        rows.push_back(row);
    }
    std::vector<std::size_t> width(head.size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            const std::string pad(width[c] - row[c].size(), ' ');
            out << (c == 0 ? row[c] + pad : "  " + pad + row[c]);
        }
        out << '\n';
    }
}

void emit_trace(std::ostream& out, const GusspModel& model, const TrialRecord& record) {
    out << "step state knowledge action cost observation\n";
    for (const auto& t : record.trace) {
        out << t.step << ' ' << model.state_label(t.state) << ' ' << t.knowledge.to_string() << ' '
            << (t.action < 0 ? std::string("-") : model.action_name(t.action)) << ' ' << num(t.cost_so_far) << ' '
            << t.observation.to_string() << '\n';
    }
}

}  // namespace gussp
