#include "gussp/ssp.hpp"

#include <limits>

namespace gussp {

Ssp::Ssp(int num_actions) : num_actions_(num_actions) {}

void Ssp::set_start(StateKey key) { start_ = intern(key); }

NodeId Ssp::intern(StateKey key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<NodeId>(keys_.size()));
    if (inserted) {
        if (keys_.size() >= static_cast<std::size_t>(std::numeric_limits<NodeId>::max())) {
            throw GusspError(ErrorKind::StateBudgetExceeded, "node id space exhausted");
        }
        keys_.push_back(key);
        goal_.push_back(goal_key(key) ? 1 : 0);
        row_.push_back(-1);
    }
    return it->second;
}

NodeId Ssp::find(StateKey key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
}

void Ssp::expand(NodeId id) {
    const auto idx = static_cast<std::size_t>(id);
    if (row_[idx] >= 0) {
        return;
    }
    const auto actions = static_cast<std::size_t>(num_actions_);
    scratch_.resize(actions);
    if (goal_[idx]) {
        for (auto& row : scratch_) {
            row.cost = 0.0;
            row.outcomes.assign(1, {keys_[idx], 1.0});
        }
    } else {
        for (auto& row : scratch_) {
            row.cost = 0.0;
            row.outcomes.clear();
        }
        generate(keys_[idx], scratch_);
        // Merge duplicate successors, keeping first-occurrence order.
        for (auto& row : scratch_) {
            auto& outs = row.outcomes;
            std::size_t kept = 0;
            for (std::size_t i = 0; i < outs.size(); ++i) {
                std::size_t j = 0;
                while (j < kept && outs[j].first != outs[i].first) {
                    ++j;
                }
                if (j < kept) {
                    outs[j].second += outs[i].second;
                } else {
                    outs[kept++] = outs[i];
                }
            }
            outs.resize(kept);
        }
    }
    const auto base = static_cast<std::int64_t>(costs_.size());
    offsets_.push_back(static_cast<std::uint32_t>(transitions_.size()));
    for (std::size_t a = 0; a < actions; ++a) {
        costs_.push_back(scratch_[a].cost);
        for (const auto& [key, p] : scratch_[a].outcomes) {
            transitions_.push_back({intern(key), p});
        }
        offsets_.push_back(static_cast<std::uint32_t>(transitions_.size()));
    }
    row_[idx] = base;
    ++num_expanded_;
}

double Ssp::cost(NodeId id, ActionId a) {
    expand(id);
    return costs_[static_cast<std::size_t>(row_[static_cast<std::size_t>(id)]) + static_cast<std::size_t>(a)];
}

std::span<const Transition> Ssp::outcomes(NodeId id, ActionId a) {
    expand(id);
    const auto row = static_cast<std::size_t>(row_[static_cast<std::size_t>(id)]);
    const auto actions = static_cast<std::size_t>(num_actions_);
    const std::size_t state_slot = row / actions;
    const std::size_t o = state_slot * (actions + 1) + static_cast<std::size_t>(a);
    const std::uint32_t begin = offsets_[o];
    const std::uint32_t end = offsets_[o + 1];
    return {transitions_.data() + begin, transitions_.data() + end};
}

}  // namespace gussp
