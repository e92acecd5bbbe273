#include "gussp/compiler.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

namespace gussp {

StateKey encode(const CompiledState& x) {
    return (static_cast<StateKey>(static_cast<std::uint32_t>(x.s)) << 32) | x.k.packed();
}

CompiledSsp::CompiledSsp(std::shared_ptr<const GusspModel> model)
    : Ssp(model->num_actions()), model_(std::move(model)) {
    set_start(encode({model_->start(), KnowledgeVector(model_->num_goals())}));
}

CompiledState CompiledSsp::decode(StateKey key) const {
    return {static_cast<StateId>(key >> 32),
            KnowledgeVector::unpack(model_->num_goals(), static_cast<std::uint32_t>(key & 0xFFFFFFFFu))};
}

CompiledState CompiledSsp::state(NodeId id) const { return decode(key(id)); }

bool CompiledSsp::goal_key(StateKey key) const {
    const CompiledState x = decode(key);
    return is_goal_state(*model_, x.s, x.k);
}

const std::vector<WeightedObservation>& CompiledSsp::revelation(const KnowledgeVector& k, GoalConfig reveal) const {
    const std::uint64_t cache_key = (static_cast<std::uint64_t>(k.packed()) << 32) | reveal;
    auto it = revelation_cache_.find(cache_key);
    if (it == revelation_cache_.end()) {
        it = revelation_cache_.emplace(cache_key, observation_distribution(model_->prior(), k, reveal)).first;
    }
    return it->second;
}

void CompiledSsp::generate(StateKey key, std::vector<GeneratedRow>& rows) const {
    const CompiledState x = decode(key);
    const GusspModel& m = *model_;
    const int site = m.site(x.s);
    const bool site_is_goal = site >= 0 && x.k.status(site) == GoalStatus::ConfirmedGoal;
    for (ActionId a = 0; a < m.num_actions(); ++a) {
        const Effect& e = m.dynamics(x.s, a, site_is_goal);
        auto& row = rows[static_cast<std::size_t>(a)];
        row.cost = e.cost;
        for (const Outcome& o : e.outcomes) {
            const GoalConfig reveal = m.reveal_mask(o.next);
            if ((reveal & x.k.unknown_mask()) == 0) {
                row.outcomes.emplace_back(encode({o.next, x.k}), o.probability);
                continue;
            }
            for (const auto& wo : revelation(x.k, reveal)) {
                row.outcomes.emplace_back(encode({o.next, apply_observation(x.k, wo.observation)}),
                                          o.probability * wo.probability);
            }
        }
    }
}

namespace {

// Every potential goal (or terminal state) must be reachable from the start in
// the base graph; cheap check used when full verification is skipped.
void check_base_reachability(const GusspModel& m) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(m.num_states()), 0);
    std::deque<StateId> queue{m.start()};
    seen[static_cast<std::size_t>(m.start())] = 1;
    auto push = [&](StateId t) {
        if (!seen[static_cast<std::size_t>(t)]) {
            seen[static_cast<std::size_t>(t)] = 1;
            queue.push_back(t);
        }
    };
    while (!queue.empty()) {
        const StateId s = queue.front();
        queue.pop_front();
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            for (const auto& o : m.effect(s, a).outcomes) {
                push(o.next);
            }
            if (const Effect* e = m.goal_effect(s, a)) {
                for (const auto& o : e->outcomes) {
                    push(o.next);
                }
            }
        }
    }
    // A potential goal counts as reachable through any state of its site.
    std::vector<char> site_seen(static_cast<std::size_t>(m.num_goals()), 0);
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (seen[static_cast<std::size_t>(s)] && m.site(s) >= 0) {
            site_seen[static_cast<std::size_t>(m.site(s))] = 1;
        }
    }
    for (int i = 0; i < m.num_goals(); ++i) {
        if (!site_seen[static_cast<std::size_t>(i)]) {
            throw GusspError(ErrorKind::ImproperModel,
                             "potential goal " + std::to_string(i) + " is unreachable from the start");
        }
    }
}

}  // namespace

std::unique_ptr<CompiledSsp> compile(std::shared_ptr<const GusspModel> model, const CompileOptions& options) {
    check_base_reachability(*model);
    auto ssp = std::make_unique<CompiledSsp>(std::move(model));
    if (options.verify_proper) {
        const ReachableSet reachable = enumerate_reachable(*ssp, options.state_budget);
        verify_proper(*ssp, reachable);
    }
    return ssp;
}

ReachableSet enumerate_reachable(Ssp& ssp, std::size_t state_budget) {
    ReachableSet out;
    std::vector<std::uint8_t> seen(ssp.num_states(), 0);
    auto mark = [&](NodeId id) {
        if (static_cast<std::size_t>(id) >= seen.size()) {
            seen.resize(ssp.num_states(), 0);
        }
        if (seen[static_cast<std::size_t>(id)]) {
            return false;
        }
        seen[static_cast<std::size_t>(id)] = 1;
        return true;
    };
    mark(ssp.start());
    out.states.push_back(ssp.start());
    for (std::size_t head = 0; head < out.states.size(); ++head) {
        const NodeId x = out.states[head];
        if (ssp.is_goal(x)) {
            continue;
        }
        for (ActionId a = 0; a < ssp.num_actions(); ++a) {
            for (const Transition& t : ssp.outcomes(x, a)) {
                if (mark(t.next)) {
                    if (out.states.size() >= state_budget) {
                        throw GusspError(ErrorKind::StateBudgetExceeded,
                                         "reachable state count exceeds budget " + std::to_string(state_budget));
                    }
                    out.states.push_back(t.next);
                }
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> almost_sure_goal_reachability(Ssp& ssp, const ReachableSet& reachable) {
    // Greatest fixpoint: keep states that can reach a goal using only actions
    // whose every outcome stays inside the kept set.
    const std::size_t n = ssp.num_states();
    std::vector<std::uint8_t> keep(n, 0);
    for (NodeId x : reachable.states) {
        keep[static_cast<std::size_t>(x)] = 1;
    }
    std::vector<std::vector<NodeId>> predecessors(n);
    while (true) {
        for (auto& p : predecessors) {
            p.clear();
        }
        for (NodeId x : reachable.states) {
            if (!keep[static_cast<std::size_t>(x)] || ssp.is_goal(x)) {
                continue;
            }
            for (ActionId a = 0; a < ssp.num_actions(); ++a) {
                const auto outs = ssp.outcomes(x, a);
                const bool safe = std::all_of(outs.begin(), outs.end(), [&](const Transition& t) {
                    return keep[static_cast<std::size_t>(t.next)] != 0;
                });
                if (!safe) {
                    continue;
                }
                for (const Transition& t : outs) {
                    predecessors[static_cast<std::size_t>(t.next)].push_back(x);
                }
            }
        }
        std::vector<std::uint8_t> reach(n, 0);
        std::deque<NodeId> queue;
        for (NodeId x : reachable.states) {
            if (keep[static_cast<std::size_t>(x)] && ssp.is_goal(x)) {
                reach[static_cast<std::size_t>(x)] = 1;
                queue.push_back(x);
            }
        }
        while (!queue.empty()) {
            const NodeId y = queue.front();
            queue.pop_front();
            for (NodeId x : predecessors[static_cast<std::size_t>(y)]) {
                if (!reach[static_cast<std::size_t>(x)]) {
                    reach[static_cast<std::size_t>(x)] = 1;
                    queue.push_back(x);
                }
            }
        }
        if (reach == keep) {
            return keep;
        }
        keep = std::move(reach);
    }
}

void verify_proper(Ssp& ssp, const ReachableSet& reachable) {
    const auto ok = almost_sure_goal_reachability(ssp, reachable);
    for (NodeId x : reachable.states) {
        if (!ok[static_cast<std::size_t>(x)]) {
            throw GusspError(ErrorKind::ImproperModel,
                             "compiled state " + std::to_string(x) + " cannot reach a goal with probability 1");
        }
    }
}

void dump_compiled(std::ostream& out, CompiledSsp& ssp, const ReachableSet& reachable) {
    for (NodeId x : reachable.states) {
        const CompiledState cs = ssp.state(x);
        out << x << "  " << cs.s << "  " << cs.k.to_string() << "  [";
        bool first = true;
        if (!ssp.is_goal(x)) {
            for (ActionId a = 0; a < ssp.num_actions(); ++a) {
                for (const Transition& t : ssp.outcomes(x, a)) {
                    out << (first ? "" : ",") << a << "->(" << t.next << ',' << t.probability << ')';
                    first = false;
                }
            }
        }
        out << "]\n";
    }
}

}  // namespace gussp
