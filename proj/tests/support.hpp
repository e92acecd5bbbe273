#pragma once

// Independent reference computations shared by the test executables. None of
// these go through KnowledgeVector conditioning or the library solvers: beliefs
// are full distributions over configurations updated by Bayes' rule, values
// come from plain fixpoint iteration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gussp/compiler.hpp"
#include "gussp/model.hpp"
#include "gussp/rng.hpp"

namespace gussp::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Random small models

struct RandomModelOptions {
    int max_width = 4;
    int max_height = 4;
    int max_goals = 3;
    bool landmarks = false;
    bool deterministic = false;
    bool collect_action = false;  // goal-conditioned "collect" into a terminal state
    bool random_prior = true;
};

/// Open grid without obstacles; moves slip to a random neighbour or stay.
inline std::shared_ptr<const GusspModel> random_model(Rng& rng, const RandomModelOptions& o = {}) {
    const int w = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_width)));
    int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.max_height)));
    if (w * h < 3) {
        h = 3;
    }
    const int cells = w * h;
    const int goals = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(o.max_goals, cells - 1))));
    const int done = o.collect_action ? cells : -1;
    const int moves = 4;
    const int actions = moves + (o.collect_action ? 1 : 0);

    ModelDescription d;
    d.num_states = cells + (o.collect_action ? 1 : 0);
    d.num_actions = actions;
    std::vector<int> order(static_cast<std::size_t>(cells));
    for (int i = 0; i < cells; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    for (int i = cells - 1; i > 0; --i) {
        std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<std::uint64_t>(i + 1))]);
    }
    d.start = order[0];
    for (int i = 0; i < goals; ++i) {
        d.potential_goals.push_back(order[static_cast<std::size_t>(i + 1)]);
    }
    const int dx[4] = {0, 0, 1, -1};
    const int dy[4] = {-1, 1, 0, 0};
    auto neighbour = [&](int s, int m) {
        const int x = s % w + dx[m];
        const int y = s / w + dy[m];
        return (x < 0 || y < 0 || x >= w || y >= h) ? s : y * w + x;
    };
    for (int s = 0; s < cells; ++s) {
        for (int m = 0; m < moves; ++m) {
            Effect e;
            e.cost = 1.0 + static_cast<double>(rng.below(3));
            const int target = neighbour(s, m);
            if (o.deterministic) {
                e.outcomes = {{target, 1.0}};
            } else {
                const double p = 0.6 + 0.1 * static_cast<double>(rng.below(4));
                const int slip = neighbour(s, static_cast<int>(rng.below(4)));
                std::map<int, double> row{{target, p}};
                row[slip] += (1.0 - p) / 2;
                row[s] += (1.0 - p) / 2;
                for (auto [t, q] : row) {
                    e.outcomes.push_back({t, q});
                }
            }
            d.effects.push_back(e);
        }
        if (o.collect_action) {
            d.effects.push_back({4.0, {{s, 1.0}}});
        }
    }
    if (o.collect_action) {
        for (int a = 0; a < actions; ++a) {
            d.effects.push_back({0.0, {{done, 1.0}}});
        }
        d.terminal.assign(static_cast<std::size_t>(d.num_states), 0);
        d.terminal[static_cast<std::size_t>(done)] = 1;
        for (StateId g : d.potential_goals) {
            d.goal_effects[static_cast<std::int64_t>(g) * actions + moves] = {1.5, {{done, 1.0}}};
        }
        d.termination = Termination::BaseTerminal;
    }
    if (o.landmarks && cells - 1 - goals > 0) {
        d.landmark_vicinity.assign(static_cast<std::size_t>(d.num_states), 0);
        const int l = order[static_cast<std::size_t>(goals + 1 + rng.below(static_cast<std::uint64_t>(cells - 1 - goals)))];
        GoalConfig v = static_cast<GoalConfig>(rng.below((1u << goals) - 1) + 1);
        d.landmark_vicinity[static_cast<std::size_t>(l)] = v;
    }
    const GoalConfig all = (1u << goals) - 1;
    const auto kind = o.random_prior ? rng.below(3) : 0;
    if (kind == 0) {
        d.prior = GoalPrior::uniform(goals);
    } else if (kind == 1) {
        std::vector<WeightedConfig> table;
        double total = 0.0;
        for (GoalConfig g = 1; g <= all; ++g) {
            const double x = static_cast<double>(rng.below(4));
            if (x > 0.0) {
                table.push_back({g, x});
                total += x;
            }
        }
        if (table.empty()) {
            table.push_back({all, 1.0});
            total = 1.0;
        }
        for (auto& t : table) {
            t.probability /= total;
        }
        d.prior = GoalPrior::explicit_table(goals, table);
    } else {
        std::vector<double> m;
        for (int i = 0; i < goals; ++i) {
            m.push_back(0.1 + 0.2 * static_cast<double>(rng.below(5)));
        }
        d.prior = GoalPrior::independent_bernoulli(m);
    }
    return std::make_shared<const GusspModel>(std::move(d));
}

// ---------------------------------------------------------------------------
// Belief process over X = S x G

/// Distribution over all nonempty configurations, indexed by config - 1.
using ConfigBelief = std::vector<double>;

inline ConfigBelief prior_belief(const GusspModel& m) {
    const GoalConfig all = (1u << m.num_goals()) - 1;
    ConfigBelief b(all, 0.0);
    for (GoalConfig g = 1; g <= all; ++g) {
        b[g - 1] = m.prior().mass(g);
    }
    return b;
}

inline double goal_mass(const ConfigBelief& b, int index) {
    double p = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (((i + 1) >> index) & 1u) {
            p += b[i];
        }
    }
    return p;
}

/// Joint belief over (base state, configuration) advanced by one action and
/// conditioned on the arrival state and the revealed pattern.
struct JointBelief {
    std::map<StateId, ConfigBelief> mass;

    static JointBelief initial(const GusspModel& m) {
        JointBelief j;
        j.mass[m.start()] = prior_belief(m);
        return j;
    }

    void step(const GusspModel& m, ActionId a, StateId arrived, GoalConfig revealed, GoalConfig pattern) {
        const std::size_t n = (1u << m.num_goals()) - 1;
        ConfigBelief next(n, 0.0);
        for (const auto& [s, b] : mass) {
            for (std::size_t i = 0; i < n; ++i) {
                if (b[i] == 0.0) {
                    continue;
                }
                const auto g = static_cast<GoalConfig>(i + 1);
                const int site = m.site(s);
                const Effect& e = m.dynamics(s, a, site >= 0 && ((g >> site) & 1u));
                double t = 0.0;
                for (const auto& o : e.outcomes) {
                    if (o.next == arrived) {
                        t += o.probability;
                    }
                }
                const double likelihood = (g & revealed) == pattern ? 1.0 : 0.0;
                next[i] += b[i] * t * likelihood;
            }
        }
        double z = 0.0;
        for (double v : next) {
            z += v;
        }
        if (!(z > 0.0)) {
            throw std::logic_error("observation has zero likelihood");
        }
        for (double& v : next) {
            v /= z;
        }
        mass.clear();
        mass[arrived] = std::move(next);
    }

    ConfigBelief marginal() const {
        ConfigBelief out;
        for (const auto& [s, b] : mass) {
            if (out.empty()) {
                out.assign(b.size(), 0.0);
            }
            for (std::size_t i = 0; i < b.size(); ++i) {
                out[i] += b[i];
            }
        }
        return out;
    }
};

/// Optimal start value of the belief MDP over (s, b), with b a full vector
/// updated by Bayes' rule and the belief space enumerated from the prior.
struct BeliefSpaceSolver {
    struct Branch {
        int next;
        double p;
    };
    struct Node {
        StateId s;
        ConfigBelief b;
        bool goal = false;
        std::vector<double> cost;
        std::vector<std::vector<Branch>> rows;
    };

    const GusspModel& m;
    std::vector<Node> nodes;
    std::map<std::pair<StateId, std::vector<long long>>, int> index;
    std::size_t max_nodes = 200'000;

    explicit BeliefSpaceSolver(const GusspModel& model) : m(model) {}

    static std::vector<long long> key_of(const ConfigBelief& b) {
        std::vector<long long> k(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            k[i] = std::llround(b[i] * 1e10);
        }
        return k;
    }

    bool is_goal(StateId s, const ConfigBelief& b) const {
        if (m.termination() == Termination::BaseTerminal) {
            return m.base_terminal(s);
        }
        const int site = m.site(s);
        return site >= 0 && goal_mass(b, site) > 1.0 - 1e-12;
    }

    int intern(StateId s, ConfigBelief b) {
        auto key = std::make_pair(s, key_of(b));
        auto it = index.find(key);
        if (it != index.end()) {
            return it->second;
        }
        if (nodes.size() >= max_nodes) {
            throw std::runtime_error("belief space too large");
        }
        const int id = static_cast<int>(nodes.size());
        index.emplace(std::move(key), id);
        Node node{s, std::move(b)};
        node.goal = is_goal(s, node.b);
        nodes.push_back(std::move(node));
        return id;
    }

    void expand(int id) {
        const std::size_t n = nodes[static_cast<std::size_t>(id)].b.size();
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            const StateId s = nodes[static_cast<std::size_t>(id)].s;
            const ConfigBelief b = nodes[static_cast<std::size_t>(id)].b;
            double cost = 0.0;
            // Joint mass over (arrival, revealed pattern) and configuration.
            std::map<std::pair<StateId, GoalConfig>, ConfigBelief> joint;
            for (std::size_t i = 0; i < n; ++i) {
                if (b[i] == 0.0) {
                    continue;
                }
                const auto g = static_cast<GoalConfig>(i + 1);
                const int site = m.site(s);
                const Effect& e = m.dynamics(s, a, site >= 0 && ((g >> site) & 1u));
                cost += b[i] * e.cost;
                for (const auto& o : e.outcomes) {
                    const GoalConfig pattern = g & m.reveal_mask(o.next);
                    auto& slot = joint[{o.next, pattern}];
                    if (slot.empty()) {
                        slot.assign(n, 0.0);
                    }
                    slot[i] += b[i] * o.probability;
                }
            }
            std::vector<Branch> row;
            for (auto& [key, mass] : joint) {
                double z = 0.0;
                for (double v : mass) {
                    z += v;
                }
                for (double& v : mass) {
                    v /= z;
                }
                row.push_back({intern(key.first, std::move(mass)), z});
            }
            nodes[static_cast<std::size_t>(id)].cost.push_back(cost);
            nodes[static_cast<std::size_t>(id)].rows.push_back(std::move(row));
        }
    }

    /// Enumerates the reachable belief space, then iterates to a fixpoint.
    double solve(double tolerance = 1e-12, std::size_t max_sweeps = 1'000'000) {
        const int start = intern(m.start(), prior_belief(m));
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i].goal) {
                expand(static_cast<int>(i));
            }
        }
        std::vector<double> v(nodes.size(), 0.0);
        for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
            double residual = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (nodes[i].goal) {
                    continue;
                }
                double best = kInf;
                for (std::size_t a = 0; a < nodes[i].rows.size(); ++a) {
                    double q = nodes[i].cost[a];
                    for (const auto& br : nodes[i].rows[a]) {
                        q += br.p * v[static_cast<std::size_t>(br.next)];
                    }
                    best = std::min(best, q);
                }
                residual = std::max(residual, std::fabs(best - v[i]));
                v[i] = best;
            }
            if (residual < tolerance) {
                return v[static_cast<std::size_t>(start)];
            }
        }
        throw std::runtime_error("belief-space iteration did not converge");
    }
};

// ---------------------------------------------------------------------------
// Plain SSP references

/// Jacobi value iteration on the base model with `goal` absorbing, ignoring
/// goal uncertainty entirely.
inline std::vector<double> base_value_iteration(const GusspModel& m, StateId goal, double tolerance = 1e-12) {
    const auto n = static_cast<std::size_t>(m.num_states());
    std::vector<double> v(n, 0.0);
    for (int sweep = 0; sweep < 1'000'000; ++sweep) {
        std::vector<double> next(n, 0.0);
        double residual = 0.0;
        for (StateId s = 0; s < m.num_states(); ++s) {
            if (s == goal) {
                continue;
            }
            double best = kInf;
            for (ActionId a = 0; a < m.num_actions(); ++a) {
                const Effect& e = m.effect(s, a);
                double q = e.cost;
                for (const auto& o : e.outcomes) {
                    q += o.probability * v[static_cast<std::size_t>(o.next)];
                }
                best = std::min(best, q);
            }
            next[static_cast<std::size_t>(s)] = best;
            residual = std::max(residual, std::fabs(best - v[static_cast<std::size_t>(s)]));
        }
        v = std::move(next);
        if (residual < tolerance) {
            return v;
        }
    }
    throw std::runtime_error("base value iteration did not converge");
}

/// Dijkstra from every state to `target` where each action may follow any of
/// its outcomes (normal or goal-conditioned).
inline std::vector<double> all_outcome_distances(const GusspModel& m, StateId target) {
    const auto n = static_cast<std::size_t>(m.num_states());
    std::vector<std::vector<std::pair<StateId, double>>> reverse(n);
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            for (const Effect* e : {&m.effect(s, a), m.goal_effect(s, a)}) {
                if (!e) {
                    continue;
                }
                for (const auto& o : e->outcomes) {
                    reverse[static_cast<std::size_t>(o.next)].push_back({s, e->cost});
                }
            }
        }
    }
    std::vector<double> d(n, kInf);
    using Item = std::pair<double, StateId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    d[static_cast<std::size_t>(target)] = 0.0;
    q.push({0.0, target});
    while (!q.empty()) {
        const auto [dist, t] = q.top();
        q.pop();
        if (dist > d[static_cast<std::size_t>(t)]) {
            continue;
        }
        for (const auto& [s, c] : reverse[static_cast<std::size_t>(t)]) {
            if (dist + c < d[static_cast<std::size_t>(s)]) {
                d[static_cast<std::size_t>(s)] = dist + c;
                q.push({dist + c, s});
            }
        }
    }
    return d;
}

/// Min-min relaxation by Bellman-Ford style relaxation over an explicit state list.
inline std::vector<double> eager_min_min(Ssp& ssp, const std::vector<NodeId>& states) {
    std::vector<double> h(ssp.num_states(), kInf);
    for (NodeId x : states) {
        if (ssp.is_goal(x)) {
            h[static_cast<std::size_t>(x)] = 0.0;
        }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (NodeId x : states) {
            if (ssp.is_goal(x)) {
                continue;
            }
            double best = h[static_cast<std::size_t>(x)];
            for (ActionId a = 0; a < ssp.num_actions(); ++a) {
                double lo = kInf;
                const double c = ssp.cost(x, a);
                for (const auto& t : ssp.outcomes(x, a)) {
                    lo = std::min(lo, h[static_cast<std::size_t>(t.next)]);
                }
                best = std::min(best, c + lo);
            }
            if (best < h[static_cast<std::size_t>(x)] - 1e-12) {
                h[static_cast<std::size_t>(x)] = best;
                changed = true;
            }
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Arborescences

struct WeightedArc {
    int from;
    int to;
    double weight;
};

/// Minimum over every choice of one in-arc per non-root vertex that forms a
/// tree; kInf when no spanning arborescence exists.
inline double brute_force_arborescence(int n, const std::vector<WeightedArc>& arcs) {
    std::vector<std::vector<int>> in(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < arcs.size(); ++i) {
        if (arcs[i].to != 0 && arcs[i].from != arcs[i].to) {
            in[static_cast<std::size_t>(arcs[i].to)].push_back(static_cast<int>(i));
        }
    }
    for (int v = 1; v < n; ++v) {
        if (in[static_cast<std::size_t>(v)].empty()) {
            return kInf;
        }
    }
    double best = kInf;
    std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
    while (true) {
        std::vector<int> parent(static_cast<std::size_t>(n), -1);
        double w = 0.0;
        for (int v = 1; v < n; ++v) {
            const auto& arc = arcs[static_cast<std::size_t>(in[static_cast<std::size_t>(v)][pick[static_cast<std::size_t>(v)]])];
            parent[static_cast<std::size_t>(v)] = arc.from;
            w += arc.weight;
        }
        bool tree = true;
        for (int v = 1; v < n && tree; ++v) {
            int u = v;
            for (int steps = 0; u != 0; ++steps) {
                if (steps > n) {
                    tree = false;
                    break;
                }
                u = parent[static_cast<std::size_t>(u)];
            }
        }
        if (tree) {
            best = std::min(best, w);
        }
        int v = 1;
        for (; v < n; ++v) {
            if (++pick[static_cast<std::size_t>(v)] < in[static_cast<std::size_t>(v)].size()) {
                break;
            }
            pick[static_cast<std::size_t>(v)] = 0;
        }
        if (v == n) {
            return best;
        }
    }
}

// ---------------------------------------------------------------------------
// EV charging

struct FlatEv {
    int horizon;
    int capacity;
    int entry;
    int target;
    std::vector<double> tariff;
    double discharge_cost;
    double penalty;
    int first_departure;
    std::vector<double> departure_weight;  // per departure time from first_departure
};

/// Backward induction over (time, charge) conditioned on "not departed yet".
inline double ev_backward_induction(const FlatEv& ev) {
    const int H = ev.horizon;
    const int C = ev.capacity;
    auto remaining = [&](int t) {
        double r = 0.0;
        for (int u = std::max(t, ev.first_departure); u <= H; ++u) {
            r += ev.departure_weight[static_cast<std::size_t>(u - ev.first_departure)];
        }
        return r;
    };
    auto shortfall = [&](int c) { return ev.penalty * std::max(0, ev.target - c); };
    // arrive[t][c]: expected cost on arriving at (t, c) without having departed.
    std::vector<std::vector<double>> arrive(static_cast<std::size_t>(H + 2), std::vector<double>(static_cast<std::size_t>(C + 1), 0.0));
    for (int c = 0; c <= C; ++c) {
        arrive[static_cast<std::size_t>(H)][static_cast<std::size_t>(c)] = shortfall(c);
    }
    for (int t = H - 1; t >= 0; --t) {
        for (int c = 0; c <= C; ++c) {
            const auto next = [&](int c2) { return arrive[static_cast<std::size_t>(t + 1)][static_cast<std::size_t>(c2)]; };
            const double act = std::min({ev.tariff[static_cast<std::size_t>(t)] + next(std::min(c + 1, C)),
                                         ev.discharge_cost + next(std::max(c - 1, 0)), next(c)});
            double value = act;
            if (t >= ev.first_departure) {
                const double r = remaining(t);
                const double q = r > 0.0 ? ev.departure_weight[static_cast<std::size_t>(t - ev.first_departure)] / r : 0.0;
                value = q * shortfall(c) + (1.0 - q) * act;
            }
            arrive[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] = value;
        }
    }
    return arrive[0][static_cast<std::size_t>(ev.entry)];
}

// ---------------------------------------------------------------------------
// Statistics

struct Sample {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline Sample summarize(const std::vector<double>& xs) {
    Sample s;
    for (double x : xs) {
        s.mean += x;
    }
    s.mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - s.mean) * (x - s.mean);
    }
    s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
    return s;
}

}  // namespace gussp::testing
