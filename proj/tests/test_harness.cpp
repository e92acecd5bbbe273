#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <set>
#include <sstream>

#include "gussp/compiler.hpp"
#include "gussp/domains.hpp"
#include "gussp/harness.hpp"
#include "support.hpp"

using namespace gussp;
using namespace gussp::testing;

namespace {

std::string golden(const std::string& name) {
    std::ifstream in(std::string(GUSSP_GOLDEN_DIR) + "/" + name);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string report_csv(const BenchmarkReport& r) {
    std::ostringstream out;
    write_report_header(out, false);
    write_report_row(out, r, false);
    write_trials_csv(out, r, false);
    return out.str();
}

BenchmarkReport line4_vi(std::size_t trials, std::uint64_t seed) {
    CellConfig c;
    c.algorithm = Algorithm::Vi;
    c.trials = trials;
    c.seed = seed;
    const Instance inst = line4_instance();
    return run_cell(build_model(inst), c, instance_digest(inst));
}

// Distinct potential goals the trace stood on, in visiting order.
std::vector<int> goal_visits(const GusspModel& m, const TrialRecord& r) {
    std::vector<int> seen;
    for (const auto& step : r.trace) {
        const int site = m.site(step.state);
        if (site >= 0 && std::find(seen.begin(), seen.end(), site) == seen.end()) {
            seen.push_back(site);
        }
    }
    return seen;
}

TrialRecord demo_trace(double belief) {
    const auto m = build_model(belief_demo_instance(belief));
    CellConfig c;
    c.algorithm = Algorithm::Lao;
    c.heuristic = HeuristicKind::Hpg;
    c.trials = 1;
    c.capture_traces = true;
    auto r = run_cell(m, c);
    REQUIRE(r.records.size() == 1);
    return r.records[0];
}

}  // namespace

TEST_CASE("report headers match the golden files") {
    std::ostringstream plain;
    write_report_header(plain, false);
    CHECK(plain.str() == golden("report_header.csv"));
    std::ostringstream timing;
    write_report_header(timing, true);
    CHECK(timing.str() == golden("report_header_timing.csv"));
}

TEST_CASE("report rows, trials, table and trace match the golden files") {
    const Instance inst = line4_instance();
    const auto m = build_model(inst);
    CellConfig c;
    c.algorithm = Algorithm::Vi;
    c.trials = 3;
    c.seed = 5;
    c.capture_traces = true;
    const auto r = run_cell(m, c, instance_digest(inst));

    std::ostringstream row;
    write_report_header(row, false);
    write_report_row(row, r, false);
    CHECK(row.str() == golden("line4_vi_seed5.csv"));
    std::ostringstream trials;
    write_trials_csv(trials, r, false);
    CHECK(trials.str() == golden("line4_vi_seed5_trials.csv"));
    std::ostringstream pretty;
    write_pretty(pretty, {r}, false);
    CHECK(pretty.str() == golden("line4_vi_seed5_pretty.txt"));
    std::ostringstream trace;
    emit_trace(trace, *m, r.records[0]);
    CHECK(trace.str() == golden("line4_vi_seed5_trace.txt"));
}

TEST_CASE("timing columns extend each row") {
    const auto r = line4_vi(5, 1);
    std::ostringstream out;
    write_report_row(out, r, true);
    const std::string line = out.str();
    CHECK(std::count(line.begin(), line.end(), ',') == 16);
    std::ostringstream t;
    write_trials_csv(t, r, true);
    CHECK(t.str().rfind("trial,seed,config,cost,steps,replans,failed,plan_time\n", 0) == 0);
}

TEST_CASE("standard error is the sample deviation over root N") {
    const auto r = line4_vi(500, 9);
    std::vector<double> costs;
    for (const auto& rec : r.records) {
        costs.push_back(rec.cost);
    }
    const Sample s = summarize(costs);
    CHECK(r.mean_cost == doctest::Approx(s.mean).epsilon(1e-12));
    CHECK(r.std_error == doctest::Approx(s.stderr_).epsilon(1e-12));
    CHECK(r.trials == 500);
    CHECK(r.failed == 0);
}

TEST_CASE("line-4 optimal policy averages 7/3") {
    const auto r = line4_vi(10'000, 1);
    CHECK(r.start_value == doctest::Approx(7.0 / 3).epsilon(1e-9));
    CHECK(std::abs(r.mean_cost - 7.0 / 3) <= 3.0 * r.std_error);
    for (const auto& rec : r.records) {
        REQUIRE((rec.cost == 2.0 || rec.cost == 3.0));
    }
}

TEST_CASE("repeated batches cover the optimum") {
    int covered = 0;
    for (std::uint64_t batch = 0; batch < 100; ++batch) {
        const auto r = line4_vi(100, 1000 + batch);
        covered += std::abs(r.mean_cost - 7.0 / 3) <= 3.0 * r.std_error ? 1 : 0;
    }
    CHECK(covered >= 99);
}

TEST_CASE("sampled configurations follow the prior") {
    const GoalPrior prior = GoalPrior::explicit_table(2, {{0b01, 0.5}, {0b10, 0.3}, {0b11, 0.2}});
    Rng rng(4);
    std::map<GoalConfig, int> hits;
    const int n = 20'000;
    for (int i = 0; i < n; ++i) {
        ++hits[sample_configuration(prior, rng)];
    }
    CHECK(hits.size() == 3);
    for (const auto& w : prior.support()) {
        const double p = w.probability;
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(hits[w.config] / static_cast<double>(n) - p) < 4 * se);
    }
}

TEST_CASE("trial seeds are distinct and stable") {
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 1000; ++i) {
        seeds.insert(trial_seed(7, i));
    }
    CHECK(seeds.size() == 1000);
    CHECK(trial_seed(7, 3) == trial_seed(7, 3));
    CHECK(trial_seed(7, 3) != trial_seed(8, 3));
}

TEST_CASE("identical inputs give identical report bytes") {
    const Instance inst = generate_rover(10, 10, 4, 2);
    const auto m = build_model(inst);
    for (Algorithm a : {Algorithm::Vi, Algorithm::Lao, Algorithm::Flares, Algorithm::DetMlg, Algorithm::DetCg}) {
        for (HeuristicKind h : {HeuristicKind::Hpg, HeuristicKind::Hmin}) {
            CellConfig c;
            c.algorithm = a;
            c.heuristic = h;
            c.trials = 30;
            c.seed = 11;
            const auto first = report_csv(run_cell(m, c, instance_digest(inst)));
            const auto second = report_csv(run_cell(build_model(inst), c, instance_digest(inst)));
            CHECK(first == second);
        }
    }
}

TEST_CASE("determinization results do not depend on the thread count") {
    const Instance inst = generate_rover(12, 12, 5, 4);
    const auto m = build_model(inst);
    for (Algorithm a : {Algorithm::DetMlg, Algorithm::DetCg}) {
        CellConfig c;
        c.algorithm = a;
        c.trials = 60;
        c.seed = 3;
        c.threads = 1;
        const auto serial = report_csv(run_cell(m, c));
        c.threads = 4;
        const auto parallel = report_csv(run_cell(m, c));
        CHECK(serial == parallel);
    }
}

TEST_CASE("failed trials are counted and excluded from the mean") {
    CellConfig c;
    c.algorithm = Algorithm::Vi;
    c.trials = 200;
    c.seed = 2;
    c.step_budget = 2;  // cost-3 trials need three steps
    const auto r = run_cell(build_model(line4_instance()), c);
    std::size_t failed = 0;
    for (const auto& rec : r.records) {
        failed += rec.failed ? 1 : 0;
        if (rec.failed) {
            CHECK_FALSE(rec.failure.empty());
        }
    }
    CHECK(failed > 0);
    CHECK(r.failed == failed);
    CHECK(r.mean_cost == 2.0);
}

TEST_CASE("determinization reports no start value") {
    CellConfig c;
    c.algorithm = Algorithm::DetCg;
    c.trials = 10;
    const auto r = run_cell(build_model(line4_instance()), c);
    CHECK(std::isnan(r.start_value));
    CHECK(r.mean_replans <= 1.0);
}

TEST_CASE("FLARES executes to the goal with replanning") {
    CellConfig c;
    c.algorithm = Algorithm::Flares;
    c.heuristic = HeuristicKind::Hpg;
    c.trials = 50;
    c.seed = 1;
    const auto r = run_cell(build_model(generate_rover(15, 15, 5, 1)), c);
    CHECK(r.failed == 0);
    CHECK(r.expanded > 0);
    CHECK(r.planning_time >= r.first_plan_time);
}

TEST_CASE("names parse and print") {
    for (Algorithm a : {Algorithm::Vi, Algorithm::Lao, Algorithm::Flares, Algorithm::DetMlg, Algorithm::DetCg}) {
        CHECK(parse_algorithm(to_string(a)) == a);
    }
    for (HeuristicKind h : {HeuristicKind::Zero, HeuristicKind::Hmin, HeuristicKind::Hpg}) {
        CHECK(parse_heuristic(to_string(h)) == h);
    }
    CHECK_THROWS_AS(parse_algorithm("rtdp"), std::invalid_argument);
    CHECK_THROWS_AS(parse_heuristic("hff"), std::invalid_argument);
    CHECK(is_determinization(Algorithm::DetCg));
    CHECK_FALSE(is_determinization(Algorithm::Flares));
}

TEST_CASE("instance digest is a function of the file contents") {
    CHECK(instance_digest(line4_instance()) == "29ef294a6ef72cd5");
    CHECK(instance_digest(generate_rover(8, 8, 3, 1)) == instance_digest(generate_rover(8, 8, 3, 1)));
    CHECK(instance_digest(generate_rover(8, 8, 3, 1)) != instance_digest(generate_rover(8, 8, 3, 2)));
}

TEST_CASE("rover traces depend on the belief in the true location") {
    const auto m = build_model(belief_demo_instance(0.25));
    const auto low = demo_trace(0.1);
    const auto mid = demo_trace(0.25);
    const auto high = demo_trace(0.9);
    auto path = [](const TrialRecord& r) {
        std::vector<StateId> p;
        for (const auto& s : r.trace) {
            p.push_back(s.state);
        }
        return p;
    };
    CHECK(path(low) != path(mid));
    CHECK(path(low) != path(high));
    CHECK(path(mid) != path(high));
    for (const auto* r : {&low, &mid, &high}) {
        CHECK_FALSE(r->failed);
        CHECK(r->trace.back().knowledge.status(0) == GoalStatus::ConfirmedGoal);
    }
    // optimistic: straight to G; pessimistic: other locations first
    const auto vh = goal_visits(*m, high);
    const auto vl = goal_visits(*m, low);
    CHECK(vh == std::vector<int>{0});
    CHECK(goal_visits(*m, mid) == std::vector<int>{1, 0});
    CHECK(vl == std::vector<int>{1, 2, 3, 0});
}

TEST_CASE("a certain goal executes the base optimal policy") {
    RoverParams p;
    p.width = 6;
    p.height = 5;
    p.start = {0, 0};
    p.obstacles = {{2, 0}, {2, 1}, {2, 2}, {4, 3}, {4, 4}};
    p.goals = {{5, 4}};
    p.terminate_on_arrival = true;
    const auto m = build_rover(p);
    const auto v = base_value_iteration(*m, m->potential_goals()[0]);
    CellConfig c;
    c.algorithm = Algorithm::Vi;
    c.trials = 20;
    c.capture_traces = true;
    const auto r = run_cell(m, c);
    for (const auto& rec : r.records) {
        REQUIRE(rec.trace.size() == rec.steps + 1);
        for (std::size_t i = 0; i + 1 < rec.trace.size(); ++i) {
            const StateId s = rec.trace[i].state;
            double best = kInf;
            double chosen = kInf;
            for (ActionId a = 0; a < m->num_actions(); ++a) {
                const Effect& e = m->effect(s, a);
                double q = e.cost;
                for (const auto& o : e.outcomes) {
                    q += o.probability * v[static_cast<std::size_t>(o.next)];
                }
                best = std::min(best, q);
                if (a == rec.trace[i].action) {
                    chosen = q;
                }
            }
            REQUIRE(chosen == doctest::Approx(best).epsilon(1e-9));
        }
    }
}
