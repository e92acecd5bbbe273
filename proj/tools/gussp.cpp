// gussp: benchmark CLI.
//
//   gussp plan <instance> --algorithm lao --heuristic hpg --trials 100 --seed 0 --out report.csv
//   gussp arborescence <instance> --out audit.csv
//   gussp generate rover --width 20 --height 20 --goals 6 --seed 1 --out rover.txt
//
// Exit codes: 0 success, 2 invalid instance or usage, 3 solver failure.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "gussp/arborescence.hpp"
#include "gussp/compiler.hpp"
#include "gussp/harness.hpp"

using namespace gussp;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

bool is_instance_error(const GusspError& e) {
    return e.kind() == ErrorKind::InvalidInstance || e.kind() == ErrorKind::InvalidModel ||
           e.kind() == ErrorKind::TooManyGoals;
}

struct PlanArgs {
    std::string instance;
    std::vector<std::string> algorithms = {"lao"};
    std::vector<std::string> heuristics = {"hpg"};
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    std::string out;
    std::string trace_dir;
    std::string trials_out;
    std::string dump_compiled;
    std::string convergence_log;
    bool pretty = false;
    bool timing = false;
    int horizon = 1;
    double epsilon = 0.0;
    std::size_t state_budget = kDefaultStateBudget;
    std::size_t step_budget = 100'000;
    unsigned threads = 0;
};

// Output stream that is either a file or stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) {
                throw std::runtime_error("cannot write '" + path + "'");
            }
        }
    }
    std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

std::vector<CellConfig> expand_cells(const PlanArgs& args) {
    std::vector<CellConfig> cells;
    std::set<std::pair<Algorithm, HeuristicKind>> seen;
    for (const auto& a : args.algorithms) {
        const Algorithm alg = parse_algorithm(a);
        for (const auto& h : args.heuristics) {
            HeuristicKind heur = parse_heuristic(h);
            // The heuristic only matters for lao and flares.
            if (alg == Algorithm::Vi || is_determinization(alg)) {
                heur = HeuristicKind::Zero;
            }
            if (!seen.insert({alg, heur}).second) {
                continue;
            }
            CellConfig c;
            c.algorithm = alg;
            c.heuristic = heur;
            c.trials = args.trials;
            c.seed = args.seed;
            c.flares_horizon = args.horizon;
            c.epsilon = args.epsilon;
            c.state_budget = args.state_budget;
            c.step_budget = args.step_budget;
            c.capture_traces = !args.trace_dir.empty();
            c.threads = args.threads;
            cells.push_back(c);
        }
    }
    return cells;
}

int run_plan(const PlanArgs& args) {
    Instance instance;
    std::shared_ptr<const GusspModel> model;
    std::vector<CellConfig> cells;
    try {
        instance = load_instance(args.instance);
        model = build_model(instance);
        cells = expand_cells(args);
    } catch (const GusspError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_instance_error(e) ? kExitInvalid : kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    const std::string digest = instance_digest(instance);

    try {
        if (!args.dump_compiled.empty()) {
            auto ssp = compile(model, {.verify_proper = false, .state_budget = args.state_budget});
            const auto reachable = enumerate_reachable(*ssp, args.state_budget);
            Sink dump(args.dump_compiled);
            dump_compiled(dump.get(), *ssp, reachable);
        }

        std::unique_ptr<Sink> convergence;
        if (!args.convergence_log.empty()) {
            convergence = std::make_unique<Sink>(args.convergence_log);
            convergence->get() << "algorithm,heuristic,iteration,residual,expanded\n";
        }

        std::vector<BenchmarkReport> reports;
        for (auto cell : cells) {
            if (convergence) {
                std::ostream& log = convergence->get();
                const std::string prefix =
                    std::string(to_string(cell.algorithm)) + "," + to_string(cell.heuristic) + ",";
                cell.on_iteration = [&log, prefix](std::size_t it, double residual, std::size_t expanded) {
                    char buf[32];
                    const auto r = std::to_chars(buf, buf + sizeof buf, residual);
                    log << prefix << it << ',' << std::string(buf, r.ptr) << ',' << expanded << '\n';
                };
            }
            reports.push_back(run_cell(model, cell, digest));
        }

        {
            Sink out(args.pretty && args.out.empty() ? "" : args.out);
            if (!(args.pretty && args.out.empty())) {
                write_report_header(out.get(), args.timing);
                for (const auto& r : reports) {
                    write_report_row(out.get(), r, args.timing);
                }
            }
        }
        if (args.pretty) {
            write_pretty(std::cout, reports, args.timing);
        }
        if (!args.trials_out.empty()) {
            Sink trials(args.trials_out);
            for (const auto& r : reports) {
                trials.get() << "# " << to_string(r.algorithm) << ' ' << to_string(r.heuristic) << '\n';
                write_trials_csv(trials.get(), r, args.timing);
            }
        }
        if (!args.trace_dir.empty()) {
            std::filesystem::create_directories(args.trace_dir);
            for (const auto& r : reports) {
                for (std::size_t i = 0; i < r.records.size(); ++i) {
                    const auto path = std::filesystem::path(args.trace_dir) /
                                      (std::string(to_string(r.algorithm)) + "-" + to_string(r.heuristic) + "-" +
                                       std::to_string(i) + ".trace");
                    std::ofstream f(path);
                    emit_trace(f, *model, r.records[i]);
                }
            }
        }
        bool any_failed = false;
        for (const auto& r : reports) {
            any_failed = any_failed || r.failed > 0;
        }
        return any_failed ? kExitSolver : 0;
    } catch (const GusspError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_instance_error(e) ? kExitInvalid : kExitSolver;
    }
}

int run_arborescence(const std::string& path, const std::string& out_path, double epsilon) {
    try {
        const Instance instance = load_instance(path);
        const auto model = build_model(instance);
        const GoalGraph graph = build_goal_graph(*model);
        const Arborescence tree = min_arborescence(graph);
        auto ssp = compile(model);
        ViOptions vi;
        vi.epsilon = epsilon > 0.0 ? epsilon : 1e-10;
        const auto solved = value_iteration(*ssp, vi);
        auto values = solved.values;

        Sink sink(out_path);
        std::ostream& out = sink.get();
        auto vertex = [](int v) { return v == 0 ? std::string("root") : "g" + std::to_string(v - 1); };
        auto num = [](double v) {
            char buf[32];
            const auto r = std::to_chars(buf, buf + sizeof buf, v);
            return std::string(buf, r.ptr);
        };
        out << "kind,from,to,weight\n";
        for (const auto& e : tree.edges) {
            out << "edge," << vertex(e.from) << ',' << vertex(e.to) << ',' << num(e.weight) << '\n';
        }
        out << "arborescence_weight,,," << num(tree.weight) << '\n';
        out << "optimal_value,,," << num(values.get(ssp->start())) << '\n';
        if (model->num_goals() <= 8 && !model->has_landmarks() &&
            model->termination() == Termination::ReachConfirmedGoal) {
            const VisitingOrder best = visiting_order_oracle(*model);
            std::string order;
            for (int g : best.order) {
                order += (order.empty() ? "g" : " g") + std::to_string(g);
            }
            out << "visiting_order," << order << ",," << num(best.expected_cost) << '\n';
        }
        return 0;
    } catch (const GusspError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_instance_error(e) || e.kind() == ErrorKind::NonDeterministicModel ? kExitInvalid : kExitSolver;
    }
}

struct GenerateArgs {
    std::string domain;
    int width = 20;
    int height = 20;
    int goals = 6;
    int victims = 1;
    int horizon = 16;
    int departures = 5;
    double density = 0.15;
    int landmarks = 0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_generate(const GenerateArgs& args) {
    try {
        Instance instance;
        const GridGenOptions grid{args.density, args.landmarks};
        if (args.domain == "rover") {
            instance = generate_rover(args.width, args.height, args.goals, args.seed, grid);
        } else if (args.domain == "search") {
            instance = generate_search(args.width, args.height, args.goals, args.victims, args.seed, grid);
        } else {
            instance = generate_ev(args.horizon, args.departures, args.seed);
        }
        build_model(instance);  // validate before writing
        Sink out(args.out);
        write_instance(out.get(), instance);
        return 0;
    } catch (const GusspError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Goal-uncertain SSP planner and benchmark harness"};
    app.require_subcommand(1);

    PlanArgs plan;
    auto* plan_cmd = app.add_subcommand("plan", "Solve an instance and run Monte-Carlo trials");
    plan_cmd->add_option("instance", plan.instance, "Instance file")->required();
    plan_cmd->add_option("--algorithm,-a", plan.algorithms, "vi, lao, flares, det-mlg, det-cg (repeatable)")
        ->delimiter(',');
    plan_cmd->add_option("--heuristic,-H", plan.heuristics, "zero, hmin, hpg (repeatable)")->delimiter(',');
    plan_cmd->add_option("--trials,-n", plan.trials, "Trials per cell");
    plan_cmd->add_option("--seed,-s", plan.seed, "Cell seed");
    plan_cmd->add_option("--out,-o", plan.out, "Report CSV (stdout when omitted)");
    plan_cmd->add_option("--trace", plan.trace_dir, "Directory for per-trial traces");
    plan_cmd->add_option("--trials-out", plan.trials_out, "Per-trial CSV");
    plan_cmd->add_option("--dump-compiled", plan.dump_compiled, "Write the reachable compiled state graph");
    plan_cmd->add_option("--convergence-log", plan.convergence_log, "Per-iteration residual CSV (vi, lao)");
    plan_cmd->add_flag("--pretty", plan.pretty, "Print an aligned table");
    plan_cmd->add_flag("--timing", plan.timing, "Include wall-clock columns (not byte-reproducible)");
    plan_cmd->add_option("--flares-horizon", plan.horizon, "FLARES labeling depth, -1 for unbounded");
    plan_cmd->add_option("--epsilon", plan.epsilon, "Residual tolerance (default per algorithm)");
    plan_cmd->add_option("--state-budget", plan.state_budget, "Compiled state cap");
    plan_cmd->add_option("--step-budget", plan.step_budget, "Steps per trial");
    plan_cmd->add_option("--threads", plan.threads, std::string("Workers for det-* trials (default $") + kThreadsEnv + ")");

    std::string arb_instance;
    std::string arb_out;
    double arb_epsilon = 0.0;
    auto* arb_cmd = app.add_subcommand("arborescence", "Goal-graph arborescence with optimal-value audit");
    arb_cmd->add_option("instance", arb_instance, "Deterministic instance file")->required();
    arb_cmd->add_option("--out,-o", arb_out, "Output CSV (stdout when omitted)");
    arb_cmd->add_option("--epsilon", arb_epsilon, "Value iteration tolerance");

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Write a seeded benchmark instance");
    gen_cmd->add_option("domain", gen.domain, "rover, search or ev")
        ->required()
        ->check(CLI::IsMember({"rover", "search", "ev"}));
    gen_cmd->add_option("--width", gen.width);
    gen_cmd->add_option("--height", gen.height);
    gen_cmd->add_option("--goals", gen.goals, "Potential goals (search: potential victim locations)");
    gen_cmd->add_option("--victims", gen.victims);
    gen_cmd->add_option("--horizon", gen.horizon);
    gen_cmd->add_option("--departures", gen.departures);
    gen_cmd->add_option("--density", gen.density, "Obstacle density");
    gen_cmd->add_option("--landmarks", gen.landmarks);
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--out,-o", gen.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (*plan_cmd) {
            return run_plan(plan);
        }
        if (*arb_cmd) {
            return run_arborescence(arb_instance, arb_out, arb_epsilon);
        }
        return run_generate(gen);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}
