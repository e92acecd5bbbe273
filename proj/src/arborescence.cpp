#include "gussp/arborescence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gussp/heuristics.hpp"

namespace gussp {

GoalGraph build_goal_graph(const GusspModel& model) {
    if (!model.deterministic()) {
        throw GusspError(ErrorKind::NonDeterministicModel, "goal graph requires deterministic transitions");
    }
    const DistanceOracle oracle(model);
    const int n = model.num_goals();
    const KnowledgeVector unknown(n);
    GoalGraph g;
    g.num_vertices = n + 1;
    for (int v = 0; v < n; ++v) {
        const double not_goal = 1.0 - marginal_is_goal(model.prior(), unknown, v);
        const double root_dist = oracle.distance(model.start(), v);
        if (std::isfinite(root_dist)) {
            g.edges.push_back({0, v + 1, root_dist * not_goal});
        }
        for (int u = 0; u < n; ++u) {
            if (u == v) {
                continue;
            }
            const double d = oracle.distance(model.potential_goals()[static_cast<std::size_t>(u)], v);
            if (std::isfinite(d)) {
                g.edges.push_back({u + 1, v + 1, d * not_goal});
            }
        }
    }
    return g;
}

namespace {

// Chu-Liu/Edmonds with cycle contraction; returns indices into `edges`.
// Equal weights resolve to the lowest edge index.
std::vector<int> edmonds(int n, int root, const std::vector<GoalEdge>& edges) {
    std::vector<int> in(static_cast<std::size_t>(n), -1);
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        const GoalEdge& edge = edges[static_cast<std::size_t>(e)];
        if (edge.to == root || edge.from == edge.to) {
            continue;
        }
        int& best = in[static_cast<std::size_t>(edge.to)];
        if (best < 0 || edge.weight < edges[static_cast<std::size_t>(best)].weight) {
            best = e;
        }
    }
    for (int v = 0; v < n; ++v) {
        if (v != root && in[static_cast<std::size_t>(v)] < 0) {
            throw GusspError(ErrorKind::UnreachableVertex, "vertex " + std::to_string(v) + " has no incoming edge");
        }
    }
    auto parent = [&](int v) { return edges[static_cast<std::size_t>(in[static_cast<std::size_t>(v)])].from; };

    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    std::vector<int> mark(static_cast<std::size_t>(n), -1);
    int cycles = 0;
    for (int v = 0; v < n; ++v) {
        int u = v;
        while (u != root && mark[static_cast<std::size_t>(u)] == -1 && comp[static_cast<std::size_t>(u)] == -1) {
            mark[static_cast<std::size_t>(u)] = v;
            u = parent(u);
        }
        if (u != root && mark[static_cast<std::size_t>(u)] == v && comp[static_cast<std::size_t>(u)] == -1) {
            int w = u;
            do {
                comp[static_cast<std::size_t>(w)] = cycles;
                w = parent(w);
            } while (w != u);
            ++cycles;
        }
    }
    std::vector<int> chosen;
    if (cycles == 0) {
        for (int v = 0; v < n; ++v) {
            if (v != root) {
                chosen.push_back(in[static_cast<std::size_t>(v)]);
            }
        }
        return chosen;
    }

    int m = cycles;
    for (auto& c : comp) {
        if (c == -1) {
            c = m++;
        }
    }
    auto in_cycle = [&](int v) { return comp[static_cast<std::size_t>(v)] < cycles; };
    std::vector<GoalEdge> contracted;
    std::vector<int> origin;
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        const GoalEdge& edge = edges[static_cast<std::size_t>(e)];
        const int u = comp[static_cast<std::size_t>(edge.from)];
        const int w = comp[static_cast<std::size_t>(edge.to)];
        if (u == w || edge.to == root) {
            continue;
        }
        double weight = edge.weight;
        if (in_cycle(edge.to)) {
            weight -= edges[static_cast<std::size_t>(in[static_cast<std::size_t>(edge.to)])].weight;
        }
        contracted.push_back({u, w, weight});
        origin.push_back(e);
    }
    const std::vector<int> sub = edmonds(m, comp[static_cast<std::size_t>(root)], contracted);

    std::vector<int> entry(static_cast<std::size_t>(cycles), -1);
    for (int c : sub) {
        const int e = origin[static_cast<std::size_t>(c)];
        chosen.push_back(e);
        const int to = edges[static_cast<std::size_t>(e)].to;
        if (in_cycle(to)) {
            entry[static_cast<std::size_t>(comp[static_cast<std::size_t>(to)])] = to;
        }
    }
    for (int v = 0; v < n; ++v) {
        if (v != root && in_cycle(v) && entry[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])] != v) {
            chosen.push_back(in[static_cast<std::size_t>(v)]);
        }
    }
    return chosen;
}

}  // namespace

Arborescence min_arborescence(const GoalGraph& graph) {
    Arborescence result;
    if (graph.num_vertices <= 1) {
        return result;
    }
    for (int e : edmonds(graph.num_vertices, 0, graph.edges)) {
        result.edges.push_back(graph.edges[static_cast<std::size_t>(e)]);
    }
    std::sort(result.edges.begin(), result.edges.end(),
              [](const GoalEdge& a, const GoalEdge& b) { return a.to < b.to; });
    for (const GoalEdge& e : result.edges) {
        result.weight += e.weight;
    }
    return result;
}

VisitingOrder visiting_order_oracle(const GusspModel& model) {
    const int n = model.num_goals();
    if (n > 8) {
        throw GusspError(ErrorKind::TooManyGoals, "visiting-order oracle supports at most 8 potential goals");
    }
    if (!model.deterministic()) {
        throw GusspError(ErrorKind::NonDeterministicModel, "visiting-order oracle requires deterministic transitions");
    }
    if (model.has_landmarks() || model.termination() != Termination::ReachConfirmedGoal) {
        throw GusspError(ErrorKind::InvalidModel,
                         "visiting-order oracle requires no landmarks and termination on reaching a goal");
    }
    const DistanceOracle oracle(model);
    const auto support = model.prior().support();
    auto none_of = [&](GoalConfig visited) {
        double p = 0.0;
        for (const auto& w : support) {
            if ((w.config & visited) == 0) {
                p += w.probability;
            }
        }
        return p;
    };

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    VisitingOrder best{order, kInfinity};
    do {
        double cost = 0.0;
        GoalConfig visited = 0;
        StateId from = model.start();
        for (int goal : order) {
            const double reach = none_of(visited);
            if (reach > 0.0) {
                cost += reach * oracle.distance(from, goal);
            }
            visited |= GoalConfig{1} << goal;
            from = model.potential_goals()[static_cast<std::size_t>(goal)];
        }
        if (cost < best.expected_cost) {
            best = {order, cost};
        }
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

}  // namespace gussp
