#pragma once

// Deterministic-transition GUSSPs: the belief-weighted goal graph, its
// minimum arborescence (Chu-Liu/Edmonds), and an exhaustive visiting-order
// oracle giving the true optimal expected cost.

#include <vector>

#include "gussp/model.hpp"

namespace gussp {

struct GoalEdge {
    int from;
    int to;
    double weight;
};

/// Vertex 0 is the dummy root; vertex i + 1 is potential goal i.
struct GoalGraph {
    int num_vertices = 0;
    std::vector<GoalEdge> edges;
};

/// w(u -> v) = d(u, v) * (1 - b(v)) with b the prior marginal; root edges use d(s0, v).
GoalGraph build_goal_graph(const GusspModel& model);

struct Arborescence {
    std::vector<GoalEdge> edges;  // sorted by target vertex
    double weight = 0.0;
};

/// Minimum spanning arborescence rooted at vertex 0. Throws UnreachableVertex.
Arborescence min_arborescence(const GoalGraph& graph);

struct VisitingOrder {
    std::vector<int> order;
    double expected_cost = 0.0;
};

/// Exhaustive minimization over visiting permutations of
/// sum_j P(first j-1 visits are all non-goals) * d(prev, next).
/// Requires a deterministic model without landmarks that terminates on
/// reaching a confirmed goal, and at most 8 potential goals.
VisitingOrder visiting_order_oracle(const GusspModel& model);

}  // namespace gussp
