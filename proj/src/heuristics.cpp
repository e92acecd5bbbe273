#include "gussp/heuristics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <queue>

namespace gussp {

// ---------------------------------------------------------------------------
// DistanceOracle

DistanceOracle::DistanceOracle(const GusspModel& model) : num_goals_(model.num_goals()) {
    const auto n = static_cast<std::size_t>(model.num_states());
    struct Edge {
        StateId from;
        double cost;
    };
    std::vector<std::vector<Edge>> reverse(n);
    for (StateId s = 0; s < model.num_states(); ++s) {
        for (ActionId a = 0; a < model.num_actions(); ++a) {
            auto add = [&](const Effect& e) {
                for (const Outcome& o : e.outcomes) {
                    reverse[static_cast<std::size_t>(o.next)].push_back({s, e.cost});
                }
            };
            add(model.effect(s, a));
            if (const Effect* ge = model.goal_effect(s, a)) {
                add(*ge);
            }
        }
    }
    dist_.assign(n * static_cast<std::size_t>(num_goals_), kInfinity);
    using Item = std::pair<double, StateId>;
    std::vector<double> d(n);
    for (int goal = 0; goal < num_goals_; ++goal) {
        std::fill(d.begin(), d.end(), kInfinity);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
        for (StateId s = 0; s < model.num_states(); ++s) {
            if (model.site(s) == goal) {
                d[static_cast<std::size_t>(s)] = 0.0;
                queue.push({0.0, s});
            }
        }
        while (!queue.empty()) {
            const auto [ds, s] = queue.top();
            queue.pop();
            if (ds > d[static_cast<std::size_t>(s)]) {
                continue;
            }
            for (const Edge& e : reverse[static_cast<std::size_t>(s)]) {
                const double nd = ds + e.cost;
                if (nd < d[static_cast<std::size_t>(e.from)]) {
                    d[static_cast<std::size_t>(e.from)] = nd;
                    queue.push({nd, e.from});
                }
            }
        }
        for (std::size_t s = 0; s < n; ++s) {
            dist_[s * static_cast<std::size_t>(num_goals_) + static_cast<std::size_t>(goal)] = d[s];
        }
    }
}

DistanceOracle build_distance_oracle(const GusspModel& model) { return DistanceOracle(model); }

// ---------------------------------------------------------------------------
// h_pg

namespace {

double weighted_distance(double not_goal_weight, GoalConfig config, StateId s, const DistanceOracle& oracle) {
    if (not_goal_weight <= 0.0) {
        return 0.0;
    }
    double nearest = kInfinity;
    for (GoalConfig rest = config; rest != 0; rest &= rest - 1) {
        nearest = std::min(nearest, oracle.distance(s, std::countr_zero(rest)));
    }
    return not_goal_weight * nearest;
}

}  // namespace

double h_pg(const GusspModel& model, const CompiledState& x, const DistanceOracle& oracle) {
    if (is_goal_state(model, x.s, x.k)) {
        return 0.0;
    }
    double best = kInfinity;
    for (const auto& w : posterior_config(model.prior(), x.k)) {
        best = std::min(best, weighted_distance(1.0 - w.probability, w.config, x.s, oracle));
    }
    return best;
}

HpgHeuristic::HpgHeuristic(CompiledSsp& ssp, const DistanceOracle& oracle) : ssp_(&ssp), oracle_(&oracle) {}

const std::vector<HpgHeuristic::Entry>& HpgHeuristic::entries(const KnowledgeVector& k) {
    auto it = cache_.find(k.packed());
    if (it == cache_.end()) {
        std::vector<Entry> list;
        for (const auto& w : posterior_config(ssp_->model().prior(), k)) {
            list.push_back({w.config, 1.0 - w.probability});
        }
        it = cache_.emplace(k.packed(), std::move(list)).first;
    }
    return it->second;
}

double HpgHeuristic::evaluate(const CompiledState& x) {
    if (is_goal_state(ssp_->model(), x.s, x.k)) {
        return 0.0;
    }
    double best = kInfinity;
    for (const Entry& e : entries(x.k)) {
        best = std::min(best, weighted_distance(e.not_goal_weight, e.config, x.s, *oracle_));
    }
    return best;
}

double HpgHeuristic::operator()(NodeId x) {
    if (ssp_->is_goal(x)) {
        return 0.0;
    }
    return evaluate(ssp_->state(x));
}

// ---------------------------------------------------------------------------
// h_min

MinMinHeuristic::MinMinHeuristic(Ssp& ssp) : ssp_(&ssp) {}

double MinMinHeuristic::operator()(NodeId x) {
    if (ssp_->is_goal(x)) {
        return 0.0;
    }
    const auto i = static_cast<std::size_t>(x);
    if (i < exact_.size() && !std::isnan(exact_[i])) {
        return exact_[i];
    }
    return search(x);
}

double MinMinHeuristic::search(NodeId x) {
    ++searches_;
    struct Item {
        double d;
        StateKey key;
        NodeId node;
        bool operator>(const Item& o) const { return d != o.d ? d > o.d : key > o.key; }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::unordered_map<NodeId, std::pair<double, NodeId>> best;  // node -> (dist, parent)
    auto known = [&](NodeId y) {
        const auto i = static_cast<std::size_t>(y);
        return i < exact_.size() && !std::isnan(exact_[i]);
    };
    best[x] = {0.0, -1};
    queue.push({0.0, ssp_->key(x), x});
    double bound = kInfinity;
    NodeId end = -1;
    while (!queue.empty()) {
        const Item item = queue.top();
        queue.pop();
        if (item.d > best[item.node].first) {
            continue;
        }
        if (item.d >= bound) {
            break;
        }
        const NodeId y = item.node;
        if (ssp_->is_goal(y)) {
            bound = item.d;
            end = y;
            break;
        }
        if (y != x && known(y)) {
            if (item.d + exact_[static_cast<std::size_t>(y)] < bound) {
                bound = item.d + exact_[static_cast<std::size_t>(y)];
                end = y;
            }
            continue;
        }
        for (ActionId a = 0; a < ssp_->num_actions(); ++a) {
            const double nd = item.d + ssp_->cost(y, a);
            for (const Transition& t : ssp_->outcomes(y, a)) {
                auto [it, inserted] = best.try_emplace(t.next, nd, y);
                if (inserted || nd < it->second.first) {
                    it->second = {nd, y};
                    queue.push({nd, ssp_->key(t.next), t.next});
                }
            }
        }
    }
    if (exact_.size() < ssp_->num_states()) {
        exact_.resize(ssp_->num_states(), std::numeric_limits<double>::quiet_NaN());
    }
    if (end < 0) {
        exact_[static_cast<std::size_t>(x)] = kInfinity;
        return kInfinity;
    }
    for (NodeId z = end; z >= 0; z = best[z].second) {
        if (!ssp_->is_goal(z) && !known(z)) {
            exact_[static_cast<std::size_t>(z)] = bound - best[z].first;
        }
    }
    return exact_[static_cast<std::size_t>(x)];
}

double h_min(Ssp& ssp, NodeId x) {
    MinMinHeuristic h(ssp);
    return h(x);
}

}  // namespace gussp
