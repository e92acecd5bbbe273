#pragma once

// Benchmark domains (planetary rover, search and rescue, EV charging),
// seeded instance generators, and the line-oriented instance file format.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gussp/model.hpp"

namespace gussp {

struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Landmark {
    Cell cell;
    std::vector<int> goals;  // potential-goal indices revealed on arrival
};

/// How the goal-configuration prior is specified in an instance. `Uniform`
/// means the domain's natural uniform prior: all nonempty configurations
/// (rover), all configurations with exactly `victims` locations (search),
/// single departure times (EV).
struct PriorSpec {
    PriorKind kind = PriorKind::Uniform;
    std::vector<WeightedConfig> weights;
    std::vector<double> marginals;
    /// Fixed true configuration for every trial; sampled from the prior when empty.
    std::optional<GoalConfig> truth;

    friend bool operator==(const PriorSpec&, const PriorSpec&);
};

struct GridParams {
    int width = 1;
    int height = 1;
    Cell start;
    std::vector<Cell> obstacles;
    std::vector<Cell> goals;  // potential goals, in index order
    std::vector<Landmark> landmarks;
    PriorSpec prior;
    double success = 0.8;  // move success probability; failures stay in place
    double move_cost = 1.0;

    int cell_id(Cell c) const { return c.y * width + c.x; }
    Cell cell_at(int id) const { return {id % width, id / width}; }
    bool on_grid(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    bool blocked(Cell c) const;
};

struct RoverParams : GridParams {
    double good_sample_cost = 2.0;
    double bad_sample_cost = 10.0;
    /// Drop the sample action and stop on reaching a confirmed good sample.
    bool terminate_on_arrival = false;
};

struct SearchRescueParams : GridParams {
    int victims = 1;
    double save_cost = 2.0;
};

struct EvParams {
    int horizon = 16;         // half-hour steps
    int departures = 5;       // potential departure times H-n+1 .. H
    int capacity = 8;         // charge levels 0 .. capacity
    int entry_charge = 2;
    int target_charge = 6;
    std::vector<double> tariff;  // cost of one charge step at each time, size horizon
    double discharge_cost = 0.1;
    double penalty = 4.0;        // per level of exit-charge shortfall
    PriorSpec prior;
};

enum class Domain { Rover, SearchRescue, Ev };

const char* to_string(Domain d) noexcept;

struct Instance {
    std::variant<RoverParams, SearchRescueParams, EvParams> params;

    Domain domain() const noexcept { return static_cast<Domain>(params.index()); }
};

/// Action ids: 0 north, 1 south, 2 east, 3 west, 4 sample (absent when terminating on arrival).
std::shared_ptr<const GusspModel> build_rover(const RoverParams& params);
/// Base state = (cell, saved-location mask); actions N, S, E, W, SAVE.
std::shared_ptr<const GusspModel> build_search_rescue(const SearchRescueParams& params);
/// Base state = (time, charge level) plus a departed state; actions charge, discharge, idle.
std::shared_ptr<const GusspModel> build_ev(const EvParams& params);
std::shared_ptr<const GusspModel> build_model(const Instance& instance);

/// 1x4 deterministic corridor, start at 0, potential goals at cells 2 and 3, uniform prior.
Instance line4_instance();

/// Hand-encoded search map with four potential victim locations, one victim,
/// and prior mass `goal_belief` on the true location G (index 0), the rest
/// shared equally.
Instance belief_demo_instance(double goal_belief);

struct GridGenOptions {
    double obstacle_density = 0.15;
    int landmarks = 0;
};

Instance generate_rover(int width, int height, int goals, std::uint64_t seed, const GridGenOptions& options = {});
Instance generate_search(int width, int height, int locations, int victims, std::uint64_t seed,
                         const GridGenOptions& options = {});
Instance generate_ev(int horizon, int departures, std::uint64_t seed);

/// Line-oriented text format; see README.
Instance parse_instance(std::istream& in);
Instance load_instance(const std::string& path);
void write_instance(std::ostream& out, const Instance& instance);

}  // namespace gussp
