#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "decabs/abstraction.hpp"
#include "json.hpp"

namespace decabs {

struct ScenarioError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ScenarioAgent {
  KernelSpec kernel;
  std::vector<AgentId> neighbors;
  std::optional<Point> initial_state;
  std::optional<CellIndex> initial_cell;
};

struct Scenario {
  Point lower, upper;
  std::optional<std::vector<std::size_t>> cells_per_axis;
  std::vector<ScenarioAgent> agents;
  double v_max = 0.0;
  std::optional<double> M_override;
  PlanInputs plan;
  ZetaMode zeta = ZetaMode::constant;
  bool per_agent_constants = false;
  // run block (solver knobs have defaults)
  std::optional<double> horizon;
  std::optional<std::size_t> steps;
  std::uint64_t seed = 1;
  std::size_t cc_trials = 64;
  std::size_t ode_step_divisor = 64;
  std::vector<AgentScript> scripts;  // per agent, free by default
  nlohmann::json source;
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

struct Overrides {
  std::optional<Theorem> theorem;
  std::optional<ZetaMode> zeta;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cc_trials;
  std::optional<std::size_t> ode_step_divisor;
  bool allow_lambda_hi_one = false;
};

void apply_overrides(Scenario& s, const Overrides& o);

struct BuiltModel {
  std::shared_ptr<const Model> model;
  std::vector<TransitionSystem> systems;
  std::vector<CellIndex> initial_cells;
  std::vector<Point> initial_states;  // reference points where no state was given
  std::size_t horizon_steps = 0;
};

// Builds network, bounds, plan and grid; the grid diameter replaces the plan's d_max.
BuiltModel build_model(const Scenario& s);

// Report helpers: every number keeps full precision, infinity becomes "unbounded".
nlohmann::json number(double x);
nlohmann::json to_json(const Point& p);
nlohmann::json to_json(const SystemBounds& b);
nlohmann::json to_json(const DiscretizationPlan& p);
nlohmann::json to_json(const ClosureReport& c);
nlohmann::json to_json(const ConsistencyReport& r);
nlohmann::json model_summary(const Model& m);

}  // namespace decabs
