#include "gussp/domains.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <optional>
#include <queue>
#include <sstream>
#include <type_traits>

#include "gussp/rng.hpp"

namespace gussp {

namespace {

[[noreturn]] void invalid(const std::string& message) { throw GusspError(ErrorKind::InvalidInstance, message); }

constexpr int kDx[4] = {0, 0, 1, -1};
constexpr int kDy[4] = {-1, 1, 0, 0};
const std::vector<std::string> kMoveNames = {"N", "S", "E", "W"};

std::string cell_string(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

void validate_grid(const GridParams& p) {
    if (p.width < 1 || p.height < 1) {
        invalid("grid dimensions must be positive");
    }
    if (static_cast<long long>(p.width) * p.height > (1 << 22)) {
        invalid("grid too large");
    }
    if (!p.on_grid(p.start) || p.blocked(p.start)) {
        invalid("start cell " + cell_string(p.start) + " is off the grid or blocked");
    }
    if (p.goals.empty()) {
        invalid("at least one potential goal is required");
    }
    if (p.goals.size() > static_cast<std::size_t>(kMaxPotentialGoals)) {
        throw GusspError(ErrorKind::TooManyGoals, "at most " + std::to_string(kMaxPotentialGoals) +
                                                      " potential goals are supported");
    }
    for (std::size_t i = 0; i < p.goals.size(); ++i) {
        const Cell g = p.goals[i];
        if (!p.on_grid(g) || p.blocked(g)) {
            invalid("potential goal " + cell_string(g) + " is off the grid or blocked");
        }
        if (g == p.start) {
            invalid("the start cell cannot be a potential goal");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (p.goals[j] == g) {
                invalid("duplicate potential goal " + cell_string(g));
            }
        }
    }
    for (const Landmark& l : p.landmarks) {
        if (!p.on_grid(l.cell) || p.blocked(l.cell)) {
            invalid("landmark " + cell_string(l.cell) + " is off the grid or blocked");
        }
        if (l.cell == p.start) {
            invalid("the start cell cannot be a landmark");
        }
        if (l.goals.empty()) {
            invalid("landmark " + cell_string(l.cell) + " has an empty vicinity");
        }
        for (int i : l.goals) {
            if (i < 0 || i >= static_cast<int>(p.goals.size())) {
                invalid("landmark vicinity index out of range");
            }
        }
    }
    if (!(p.success > 0.0 && p.success <= 1.0)) {
        invalid("move success probability must lie in (0, 1]");
    }
    if (!(p.move_cost >= 0.0)) {
        invalid("move cost must be nonnegative");
    }
}

GoalPrior make_prior(const PriorSpec& spec, int num_goals, const std::vector<WeightedConfig>& uniform_table) {
    try {
        switch (spec.kind) {
            case PriorKind::Uniform:
                return uniform_table.empty() ? GoalPrior::uniform(num_goals)
                                             : GoalPrior::explicit_table(num_goals, uniform_table);
            case PriorKind::Explicit:
                return GoalPrior::explicit_table(num_goals, spec.weights);
            case PriorKind::IndependentBernoulli:
                if (static_cast<int>(spec.marginals.size()) != num_goals) {
                    invalid("Bernoulli prior needs one marginal per potential goal");
                }
                return GoalPrior::independent_bernoulli(spec.marginals);
        }
    } catch (const GusspError& e) {
        if (e.kind() == ErrorKind::InvalidModel) {
            invalid(std::string("bad prior: ") + e.what());
        }
        throw;
    }
    invalid("unknown prior kind");
}

// Stochastic grid move: success to the neighbour, otherwise stay. Blocked
// or off-grid moves are deterministic self-loops.
Effect grid_move(const GridParams& p, Cell c, int dir, int base_offset) {
    const Cell to{c.x + kDx[dir], c.y + kDy[dir]};
    const int here = base_offset + p.cell_id(c);
    if (!p.on_grid(to) || p.blocked(to)) {
        return {p.move_cost, {{here, 1.0}}};
    }
    const int there = base_offset + p.cell_id(to);
    if (p.success >= 1.0) {
        return {p.move_cost, {{there, 1.0}}};
    }
    return {p.move_cost, {{there, p.success}, {here, 1.0 - p.success}}};
}

std::vector<GoalConfig> cell_vicinity(const GridParams& p) {
    std::vector<GoalConfig> v(static_cast<std::size_t>(p.width * p.height), 0);
    for (const Landmark& l : p.landmarks) {
        for (int i : l.goals) {
            v[static_cast<std::size_t>(p.cell_id(l.cell))] |= GoalConfig{1} << i;
        }
    }
    return v;
}

std::vector<int> cell_sites(const GridParams& p) {
    std::vector<int> site(static_cast<std::size_t>(p.width * p.height), -1);
    for (std::size_t i = 0; i < p.goals.size(); ++i) {
        site[static_cast<std::size_t>(p.cell_id(p.goals[i]))] = static_cast<int>(i);
    }
    return site;
}

std::int64_t row_index(StateId s, int num_actions, ActionId a) { return static_cast<std::int64_t>(s) * num_actions + a; }

}  // namespace

bool operator==(const PriorSpec& a, const PriorSpec& b) {
    if (a.kind != b.kind || a.marginals != b.marginals || a.truth != b.truth || a.weights.size() != b.weights.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.weights.size(); ++i) {
        if (a.weights[i].config != b.weights[i].config || a.weights[i].probability != b.weights[i].probability) {
            return false;
        }
    }
    return true;
}

bool GridParams::blocked(Cell c) const { return std::find(obstacles.begin(), obstacles.end(), c) != obstacles.end(); }

const char* to_string(Domain d) noexcept {
    switch (d) {
        case Domain::Rover: return "rover";
        case Domain::SearchRescue: return "search";
        case Domain::Ev: return "ev";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Builders

std::shared_ptr<const GusspModel> build_rover(const RoverParams& p) {
    validate_grid(p);
    const int cells = p.width * p.height;
    const int n = static_cast<int>(p.goals.size());
    const bool sample = !p.terminate_on_arrival;
    const StateId done = cells;

    ModelDescription d;
    d.num_states = sample ? cells + 1 : cells;
    d.num_actions = sample ? 5 : 4;
    d.action_names = kMoveNames;
    if (sample) {
        d.action_names.push_back("sample");
    }
    d.start = p.cell_id(p.start);
    for (Cell g : p.goals) {
        d.potential_goals.push_back(p.cell_id(g));
    }
    d.goal_site = cell_sites(p);
    d.landmark_vicinity = cell_vicinity(p);
    d.effects.reserve(static_cast<std::size_t>(d.num_states * d.num_actions));
    for (int id = 0; id < cells; ++id) {
        const Cell c = p.cell_at(id);
        for (int dir = 0; dir < 4; ++dir) {
            d.effects.push_back(grid_move(p, c, dir, 0));
        }
        if (sample) {
            d.effects.push_back({p.bad_sample_cost, {{id, 1.0}}});
        }
    }
    if (sample) {
        d.goal_site.push_back(-1);
        d.landmark_vicinity.push_back(0);
        for (int a = 0; a < d.num_actions; ++a) {
            d.effects.push_back({0.0, {{done, 1.0}}});
        }
        for (StateId g : d.potential_goals) {
            d.goal_effects[row_index(g, d.num_actions, 4)] = {p.good_sample_cost, {{done, 1.0}}};
        }
        d.termination = Termination::BaseTerminal;
        d.terminal.assign(static_cast<std::size_t>(d.num_states), 0);
        d.terminal[static_cast<std::size_t>(done)] = 1;
    }
    d.prior = make_prior(p.prior, n, {});
    d.true_goal_set_oracle = p.prior.truth;
    d.state_label = [p, cells](StateId s) { return s == cells ? std::string("done") : cell_string(p.cell_at(s)); };
    return std::make_shared<const GusspModel>(std::move(d));
}

std::shared_ptr<const GusspModel> build_search_rescue(const SearchRescueParams& p) {
    validate_grid(p);
    const int cells = p.width * p.height;
    const int m = static_cast<int>(p.goals.size());
    if (p.victims < 1 || p.victims > m) {
        invalid("victim count must lie in [1, number of locations]");
    }
    if (static_cast<long long>(cells) << m > (1LL << 24)) {
        invalid("search instance too large: cells * 2^locations exceeds 2^24");
    }
    const int masks = 1 << m;

    std::vector<WeightedConfig> uniform;
    if (p.prior.kind == PriorKind::Uniform) {
        for (GoalConfig g = 1; g < static_cast<GoalConfig>(masks); ++g) {
            if (std::popcount(g) == p.victims) {
                uniform.push_back({g, 0.0});
            }
        }
        for (auto& w : uniform) {
            w.probability = 1.0 / static_cast<double>(uniform.size());
        }
    }
    GoalPrior prior = make_prior(p.prior, m, uniform);
    for (const auto& w : prior.support()) {
        if (std::popcount(w.config) < p.victims) {
            invalid("prior gives mass to a configuration with fewer than " + std::to_string(p.victims) + " victims");
        }
    }

    ModelDescription d;
    d.num_states = cells * masks;
    d.num_actions = 5;
    d.action_names = kMoveNames;
    d.action_names.push_back("save");
    d.start = p.cell_id(p.start);
    const auto sites = cell_sites(p);
    const auto vicinity = cell_vicinity(p);
    d.goal_site.resize(static_cast<std::size_t>(d.num_states));
    d.landmark_vicinity.resize(static_cast<std::size_t>(d.num_states));
    d.terminal.resize(static_cast<std::size_t>(d.num_states));
    d.effects.reserve(static_cast<std::size_t>(d.num_states * d.num_actions));
    for (int mask = 0; mask < masks; ++mask) {
        const bool terminal = std::popcount(static_cast<unsigned>(mask)) >= p.victims;
        const int offset = mask * cells;
        for (int id = 0; id < cells; ++id) {
            const StateId s = offset + id;
            d.goal_site[static_cast<std::size_t>(s)] = sites[static_cast<std::size_t>(id)];
            d.landmark_vicinity[static_cast<std::size_t>(s)] = vicinity[static_cast<std::size_t>(id)];
            d.terminal[static_cast<std::size_t>(s)] = terminal ? 1 : 0;
            if (terminal) {
                for (int a = 0; a < 5; ++a) {
                    d.effects.push_back({0.0, {{s, 1.0}}});
                }
                continue;
            }
            const Cell c = p.cell_at(id);
            for (int dir = 0; dir < 4; ++dir) {
                d.effects.push_back(grid_move(p, c, dir, offset));
            }
            d.effects.push_back({p.save_cost, {{s, 1.0}}});
            const int site = sites[static_cast<std::size_t>(id)];
            if (site >= 0) {
                const StateId saved = (mask | (1 << site)) * cells + id;
                d.goal_effects[row_index(s, 5, 4)] = {p.save_cost, {{saved, 1.0}}};
            }
        }
    }
    for (Cell g : p.goals) {
        d.potential_goals.push_back(p.cell_id(g));
    }
    d.termination = Termination::BaseTerminal;
    d.prior = std::move(prior);
    d.true_goal_set_oracle = p.prior.truth;
    d.state_label = [p, cells](StateId s) {
        std::string bits;
        for (std::size_t i = 0; i < p.goals.size(); ++i) {
            bits += ((s / cells) >> i & 1) ? '1' : '0';
        }
        return cell_string(p.cell_at(s % cells)) + "|" + bits;
    };
    return std::make_shared<const GusspModel>(std::move(d));
}

std::shared_ptr<const GusspModel> build_ev(const EvParams& p) {
    const int H = p.horizon;
    const int n = p.departures;
    const int C = p.capacity;
    if (H < 2) {
        invalid("horizon must be at least 2");
    }
    if (n < 1 || n >= H) {
        invalid("departure count must lie in [1, horizon)");
    }
    if (n > kMaxPotentialGoals) {
        throw GusspError(ErrorKind::TooManyGoals, "too many departure times");
    }
    if (C < 1 || p.entry_charge < 0 || p.entry_charge > C || p.target_charge < 0 || p.target_charge > C) {
        invalid("charge levels must lie in [0, capacity] with capacity >= 1");
    }
    if (static_cast<int>(p.tariff.size()) != H) {
        invalid("tariff must list one price per time step");
    }
    for (double t : p.tariff) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            invalid("tariff prices must be finite and nonnegative");
        }
    }
    if (!(p.discharge_cost >= 0.0) || !(p.penalty >= 0.0)) {
        invalid("discharge cost and penalty must be nonnegative");
    }
    std::vector<WeightedConfig> uniform;
    if (p.prior.kind == PriorKind::Uniform) {
        for (int i = 0; i < n; ++i) {
            uniform.push_back({GoalConfig{1} << i, 1.0 / n});
        }
    }

    const int levels = C + 1;
    const int first_departure = H - n + 1;
    const StateId departed = (H + 1) * levels;
    ModelDescription d;
    d.num_states = departed + 1;
    d.num_actions = 3;
    d.action_names = {"charge", "discharge", "idle"};
    d.start = p.entry_charge;
    d.goal_site.assign(static_cast<std::size_t>(d.num_states), -1);
    d.terminal.assign(static_cast<std::size_t>(d.num_states), 0);
    d.terminal[static_cast<std::size_t>(departed)] = 1;
    for (int t = 0; t <= H; ++t) {
        for (int c = 0; c < levels; ++c) {
            const StateId s = t * levels + c;
            if (t < H) {
                d.effects.push_back({p.tariff[static_cast<std::size_t>(t)], {{(t + 1) * levels + std::min(c + 1, C), 1.0}}});
                d.effects.push_back({p.discharge_cost, {{(t + 1) * levels + std::max(c - 1, 0), 1.0}}});
                d.effects.push_back({0.0, {{(t + 1) * levels + c, 1.0}}});
            } else {
                for (int a = 0; a < 3; ++a) {
                    d.effects.push_back({0.0, {{s, 1.0}}});
                }
            }
            if (t >= first_departure) {
                d.goal_site[static_cast<std::size_t>(s)] = t - first_departure;
                const double shortfall = std::max(0, p.target_charge - c);
                for (int a = 0; a < 3; ++a) {
                    d.goal_effects[row_index(s, 3, a)] = {p.penalty * shortfall, {{departed, 1.0}}};
                }
            }
        }
    }
    for (int a = 0; a < 3; ++a) {
        d.effects.push_back({0.0, {{departed, 1.0}}});
    }
    for (int i = 0; i < n; ++i) {
        // idling from the entry charge always reaches this one
        d.potential_goals.push_back((first_departure + i) * levels + p.entry_charge);
    }
    d.termination = Termination::BaseTerminal;
    d.prior = make_prior(p.prior, n, uniform);
    d.true_goal_set_oracle = p.prior.truth;
    d.state_label = [levels, departed](StateId s) {
        if (s == departed) {
            return std::string("departed");
        }
        return "t=" + std::to_string(s / levels) + ",c=" + std::to_string(s % levels);
    };
    return std::make_shared<const GusspModel>(std::move(d));
}

std::shared_ptr<const GusspModel> build_model(const Instance& instance) {
    return std::visit(
        [](const auto& p) -> std::shared_ptr<const GusspModel> {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RoverParams>) {
                return build_rover(p);
            } else if constexpr (std::is_same_v<T, SearchRescueParams>) {
                return build_search_rescue(p);
            } else {
                return build_ev(p);
            }
        },
        instance.params);
}

// ---------------------------------------------------------------------------
// Reference instances

Instance line4_instance() {
    RoverParams p;
    p.width = 4;
    p.height = 1;
    p.start = {0, 0};
    p.goals = {{2, 0}, {3, 0}};
    p.success = 1.0;
    p.terminate_on_arrival = true;
    return {p};
}

Instance belief_demo_instance(double goal_belief) {
    if (!(goal_belief > 0.0 && goal_belief < 1.0)) {
        invalid("belief on the true location must lie in (0, 1)");
    }
    // Layout (S start, G true victim, A/B/C other potential victims, # wall):
    //   . . . . . . . . . . .
    //   . . . . . . . . B . .
    //   . . . A . . . . . . .
    //   . # # # . S . # # # .
    //   . . . . . . . . . . .
    //   . . . G . . . . . . .
    //   . . . . . . . . . C .
    // Under the default seed: belief 0.9 goes straight to G, the uniform 0.25
    // checks A first, and 0.1 clears A, B and C before G.
    SearchRescueParams p;
    p.width = 11;
    p.height = 7;
    p.start = {5, 3};
    p.goals = {{3, 5}, {3, 2}, {8, 1}, {9, 6}};
    p.obstacles = {{1, 3}, {2, 3}, {3, 3}, {7, 3}, {8, 3}, {9, 3}};
    p.victims = 1;
    p.prior.kind = PriorKind::Explicit;
    const double other = (1.0 - goal_belief) / 3.0;
    p.prior.weights = {{1, goal_belief}, {2, other}, {4, other}, {8, other}};
    p.prior.truth = 1;
    return {p};
}

// ---------------------------------------------------------------------------
// Generators

namespace {

bool all_reachable(const GridParams& p) {
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(p.width * p.height), 0);
    std::queue<Cell> queue;
    queue.push(p.start);
    seen[static_cast<std::size_t>(p.cell_id(p.start))] = 1;
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop();
        for (int dir = 0; dir < 4; ++dir) {
            const Cell to{c.x + kDx[dir], c.y + kDy[dir]};
            if (p.on_grid(to) && !p.blocked(to) && !seen[static_cast<std::size_t>(p.cell_id(to))]) {
                seen[static_cast<std::size_t>(p.cell_id(to))] = 1;
                queue.push(to);
            }
        }
    }
    return std::all_of(p.goals.begin(), p.goals.end(),
                       [&](Cell g) { return seen[static_cast<std::size_t>(p.cell_id(g))] != 0; });
}

void fill_grid(GridParams& p, int width, int height, int goals, std::uint64_t seed, const GridGenOptions& options) {
    if (width < 1 || height < 1 || goals < 1 || goals + 1 + options.landmarks > width * height) {
        invalid("grid too small for the requested number of goals");
    }
    Rng rng(seed);
    p.width = width;
    p.height = height;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> free;
        p.obstacles.clear();
        for (int id = 0; id < width * height; ++id) {
            if (rng.uniform() < options.obstacle_density) {
                p.obstacles.push_back(p.cell_at(id));
            } else {
                free.push_back(id);
            }
        }
        if (static_cast<int>(free.size()) < goals + 1 + options.landmarks) {
            continue;
        }
        // Partial Fisher-Yates for start, goals and landmarks.
        const int picks = goals + 1 + options.landmarks;
        for (int i = 0; i < picks; ++i) {
            const auto j = static_cast<std::size_t>(i) + rng.below(free.size() - static_cast<std::size_t>(i));
            std::swap(free[static_cast<std::size_t>(i)], free[j]);
        }
        p.start = p.cell_at(free[0]);
        p.goals.clear();
        for (int i = 0; i < goals; ++i) {
            p.goals.push_back(p.cell_at(free[static_cast<std::size_t>(i + 1)]));
        }
        p.landmarks.clear();
        for (int i = 0; i < options.landmarks; ++i) {
            Landmark l{p.cell_at(free[static_cast<std::size_t>(goals + 1 + i)]), {}};
            const int size = 1 + static_cast<int>(rng.below(std::min(goals, 2)));
            while (static_cast<int>(l.goals.size()) < size) {
                const int g = static_cast<int>(rng.below(static_cast<std::uint64_t>(goals)));
                if (std::find(l.goals.begin(), l.goals.end(), g) == l.goals.end()) {
                    l.goals.push_back(g);
                }
            }
            std::sort(l.goals.begin(), l.goals.end());
            p.landmarks.push_back(std::move(l));
        }
        std::sort(p.obstacles.begin(), p.obstacles.end(),
                  [&](Cell a, Cell b) { return p.cell_id(a) < p.cell_id(b); });
        if (all_reachable(p)) {
            return;
        }
    }
    invalid("could not generate a connected grid; lower the obstacle density");
}

}  // namespace

Instance generate_rover(int width, int height, int goals, std::uint64_t seed, const GridGenOptions& options) {
    RoverParams p;
    fill_grid(p, width, height, goals, seed, options);
    return {p};
}

Instance generate_search(int width, int height, int locations, int victims, std::uint64_t seed,
                         const GridGenOptions& options) {
    SearchRescueParams p;
    fill_grid(p, width, height, locations, seed, options);
    p.victims = victims;
    return {p};
}

Instance generate_ev(int horizon, int departures, std::uint64_t seed) {
    Rng rng(seed);
    EvParams p;
    p.horizon = horizon;
    p.departures = departures;
    p.capacity = 8;
    p.entry_charge = static_cast<int>(rng.below(4));
    p.target_charge = 5 + static_cast<int>(rng.below(4));
    // Off-peak/peak two-level tariff with one contiguous peak window.
    const double off_peak = 0.4 + 0.2 * rng.uniform();
    const double peak = 2.0 * off_peak + rng.uniform();
    const int peak_length = std::max(1, horizon / 3);
    const int peak_start = static_cast<int>(rng.below(static_cast<std::uint64_t>(horizon)));
    p.tariff.assign(static_cast<std::size_t>(horizon), off_peak);
    for (int i = 0; i < peak_length; ++i) {
        p.tariff[static_cast<std::size_t>((peak_start + i) % horizon)] = peak;
    }
    return {p};
}

// ---------------------------------------------------------------------------
// Instance files

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& token, int line) {
    double v = 0.0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
        invalid("line " + std::to_string(line) + ": expected a number, got '" + token + "'");
    }
    return v;
}

int parse_int(const std::string& token, int line) {
    int v = 0;
    const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
    if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
        invalid("line " + std::to_string(line) + ": expected an integer, got '" + token + "'");
    }
    return v;
}

GoalConfig indices_mask(const std::vector<std::string>& tokens, std::size_t from, int line) {
    GoalConfig mask = 0;
    for (std::size_t i = from; i < tokens.size(); ++i) {
        const int g = parse_int(tokens[i], line);
        if (g < 0 || g >= kMaxPotentialGoals) {
            invalid("line " + std::to_string(line) + ": goal index out of range");
        }
        mask |= GoalConfig{1} << g;
    }
    return mask;
}

void write_prior(std::ostream& out, const PriorSpec& prior) {
    switch (prior.kind) {
        case PriorKind::Uniform:
            out << "prior uniform\n";
            break;
        case PriorKind::Explicit:
            out << "prior explicit\n";
            for (const auto& w : prior.weights) {
                out << "weight " << format_double(w.probability);
                for (GoalConfig rest = w.config; rest != 0; rest &= rest - 1) {
                    out << ' ' << std::countr_zero(rest);
                }
                out << '\n';
            }
            break;
        case PriorKind::IndependentBernoulli:
            out << "prior bernoulli";
            for (double m : prior.marginals) {
                out << ' ' << format_double(m);
            }
            out << '\n';
            break;
    }
    if (prior.truth) {
        out << "truth";
        for (GoalConfig rest = *prior.truth; rest != 0; rest &= rest - 1) {
            out << ' ' << std::countr_zero(rest);
        }
        out << '\n';
    }
}

void write_grid(std::ostream& out, const GridParams& p) {
    out << "grid " << p.width << ' ' << p.height << '\n';
    out << "start " << p.start.x << ' ' << p.start.y << '\n';
    for (Cell c : p.obstacles) {
        out << "obstacle " << c.x << ' ' << c.y << '\n';
    }
    for (Cell c : p.goals) {
        out << "goal " << c.x << ' ' << c.y << '\n';
    }
    for (const Landmark& l : p.landmarks) {
        out << "landmark " << l.cell.x << ' ' << l.cell.y << " :";
        for (int g : l.goals) {
            out << ' ' << g;
        }
        out << '\n';
    }
    write_prior(out, p.prior);
    out << "param success " << format_double(p.success) << '\n';
    out << "param move_cost " << format_double(p.move_cost) << '\n';
}

}  // namespace

void write_instance(std::ostream& out, const Instance& instance) {
    out << "domain " << to_string(instance.domain()) << '\n';
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RoverParams>) {
                write_grid(out, p);
                out << "param good_sample_cost " << format_double(p.good_sample_cost) << '\n';
                out << "param bad_sample_cost " << format_double(p.bad_sample_cost) << '\n';
                out << "param terminate_on_arrival " << (p.terminate_on_arrival ? 1 : 0) << '\n';
            } else if constexpr (std::is_same_v<T, SearchRescueParams>) {
                write_grid(out, p);
                out << "victims " << p.victims << '\n';
                out << "param save_cost " << format_double(p.save_cost) << '\n';
            } else {
                out << "horizon " << p.horizon << '\n';
                out << "departures " << p.departures << '\n';
                out << "capacity " << p.capacity << '\n';
                out << "entry " << p.entry_charge << '\n';
                out << "target " << p.target_charge << '\n';
                out << "tariff";
                for (double t : p.tariff) {
                    out << ' ' << format_double(t);
                }
                out << '\n';
                write_prior(out, p.prior);
                out << "param discharge_cost " << format_double(p.discharge_cost) << '\n';
                out << "param penalty " << format_double(p.penalty) << '\n';
            }
        },
        instance.params);
}

Instance parse_instance(std::istream& in) {
    std::string raw;
    int line = 0;
    std::optional<Instance> instance;
    bool explicit_prior = false;

    auto grid = [&]() -> GridParams& {
        if (!instance || instance->domain() == Domain::Ev) {
            invalid("line " + std::to_string(line) + ": grid keyword outside a grid domain");
        }
        if (auto* r = std::get_if<RoverParams>(&instance->params)) {
            return *r;
        }
        return std::get<SearchRescueParams>(instance->params);
    };
    auto ev = [&]() -> EvParams& {
        if (!instance || instance->domain() != Domain::Ev) {
            invalid("line " + std::to_string(line) + ": EV keyword outside the ev domain");
        }
        return std::get<EvParams>(instance->params);
    };
    auto prior = [&]() -> PriorSpec& {
        if (!instance) {
            invalid("line " + std::to_string(line) + ": 'domain' must come first");
        }
        return instance->domain() == Domain::Ev ? ev().prior : grid().prior;
    };

    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) {
            raw.erase(hash);
        }
        std::istringstream ss(raw);
        std::vector<std::string> tok;
        for (std::string t; ss >> t;) {
            tok.push_back(t);
        }
        if (tok.empty()) {
            continue;
        }
        const std::string& key = tok[0];
        auto need = [&](std::size_t count) {
            if (tok.size() != count) {
                invalid("line " + std::to_string(line) + ": '" + key + "' expects " + std::to_string(count - 1) +
                        " argument(s)");
            }
        };
        auto cell = [&](std::size_t at) { return Cell{parse_int(tok[at], line), parse_int(tok[at + 1], line)}; };

        if (key == "domain") {
            need(2);
            if (instance) {
                invalid("line " + std::to_string(line) + ": duplicate 'domain'");
            }
            if (tok[1] == "rover") {
                instance = Instance{RoverParams{}};
            } else if (tok[1] == "search") {
                instance = Instance{SearchRescueParams{}};
            } else if (tok[1] == "ev") {
                instance = Instance{EvParams{}};
            } else {
                invalid("line " + std::to_string(line) + ": unknown domain '" + tok[1] + "'");
            }
        } else if (!instance) {
            invalid("line " + std::to_string(line) + ": 'domain' must come first");
        } else if (key == "grid") {
            need(3);
            grid().width = parse_int(tok[1], line);
            grid().height = parse_int(tok[2], line);
        } else if (key == "start") {
            need(3);
            grid().start = cell(1);
        } else if (key == "obstacle") {
            need(3);
            grid().obstacles.push_back(cell(1));
        } else if (key == "goal") {
            need(3);
            grid().goals.push_back(cell(1));
        } else if (key == "landmark") {
            if (tok.size() < 5 || tok[3] != ":") {
                invalid("line " + std::to_string(line) + ": expected 'landmark X Y : i ...'");
            }
            Landmark l{cell(1), {}};
            for (std::size_t i = 4; i < tok.size(); ++i) {
                l.goals.push_back(parse_int(tok[i], line));
            }
            grid().landmarks.push_back(std::move(l));
        } else if (key == "victims") {
            need(2);
            if (instance->domain() != Domain::SearchRescue) {
                invalid("line " + std::to_string(line) + ": 'victims' is only valid for search instances");
            }
            std::get<SearchRescueParams>(instance->params).victims = parse_int(tok[1], line);
        } else if (key == "prior") {
            if (tok.size() < 2) {
                invalid("line " + std::to_string(line) + ": 'prior' needs a kind");
            }
            PriorSpec& spec = prior();
            const auto truth = spec.truth;
            spec = {};
            spec.truth = truth;
            explicit_prior = false;
            if (tok[1] == "uniform") {
                need(2);
            } else if (tok[1] == "explicit") {
                need(2);
                spec.kind = PriorKind::Explicit;
                explicit_prior = true;
            } else if (tok[1] == "bernoulli") {
                spec.kind = PriorKind::IndependentBernoulli;
                for (std::size_t i = 2; i < tok.size(); ++i) {
                    spec.marginals.push_back(parse_double(tok[i], line));
                }
            } else {
                invalid("line " + std::to_string(line) + ": unknown prior kind '" + tok[1] + "'");
            }
        } else if (key == "weight") {
            if (!explicit_prior || tok.size() < 3) {
                invalid("line " + std::to_string(line) + ": 'weight P i ...' must follow 'prior explicit'");
            }
            prior().weights.push_back({indices_mask(tok, 2, line), parse_double(tok[1], line)});
        } else if (key == "truth") {
            if (tok.size() < 2) {
                invalid("line " + std::to_string(line) + ": 'truth' needs at least one goal index");
            }
            prior().truth = indices_mask(tok, 1, line);
        } else if (key == "horizon") {
            need(2);
            ev().horizon = parse_int(tok[1], line);
        } else if (key == "departures") {
            need(2);
            ev().departures = parse_int(tok[1], line);
        } else if (key == "capacity") {
            need(2);
            ev().capacity = parse_int(tok[1], line);
        } else if (key == "entry") {
            need(2);
            ev().entry_charge = parse_int(tok[1], line);
        } else if (key == "target") {
            need(2);
            ev().target_charge = parse_int(tok[1], line);
        } else if (key == "tariff") {
            ev().tariff.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) {
                ev().tariff.push_back(parse_double(tok[i], line));
            }
        } else if (key == "param") {
            need(3);
            const std::string& name = tok[1];
            const double v = parse_double(tok[2], line);
            bool known = true;
            if (instance->domain() == Domain::Ev) {
                if (name == "discharge_cost") {
                    ev().discharge_cost = v;
                } else if (name == "penalty") {
                    ev().penalty = v;
                } else {
                    known = false;
                }
            } else if (name == "success") {
                grid().success = v;
            } else if (name == "move_cost") {
                grid().move_cost = v;
            } else if (auto* r = std::get_if<RoverParams>(&instance->params)) {
                if (name == "good_sample_cost") {
                    r->good_sample_cost = v;
                } else if (name == "bad_sample_cost") {
                    r->bad_sample_cost = v;
                } else if (name == "terminate_on_arrival") {
                    r->terminate_on_arrival = v != 0.0;
                } else {
                    known = false;
                }
            } else if (name == "save_cost") {
                std::get<SearchRescueParams>(instance->params).save_cost = v;
            } else {
                known = false;
            }
            if (!known) {
                invalid("line " + std::to_string(line) + ": unknown parameter '" + name + "'");
            }
        } else {
            invalid("line " + std::to_string(line) + ": unknown keyword '" + key + "'");
        }
    }
    if (!instance) {
        invalid("empty instance: missing 'domain'");
    }
    return *instance;
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        invalid("cannot open instance file '" + path + "'");
    }
    return parse_instance(in);
}

}  // namespace gussp
