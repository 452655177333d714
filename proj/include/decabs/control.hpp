#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decabs/bounds.hpp"
#include "decabs/decomposition.hpp"
#include "decabs/dynamics.hpp"
#include "decabs/network.hpp"
#include "decabs/reftraj.hpp"

namespace decabs {

struct ControlError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FeedbackLaw {
  AgentId agent = 0;
  MCellConfig config;
  std::shared_ptr<const ReferenceBundle> bundle;
  KernelSpec kernel;
  std::vector<AgentId> neighbors;  // j(i)
  Point reference_point;           // centroid of the agent's cell
  Point x0;
  Point w;
  ZetaProfile zeta;
  double dt = 0.0;
};

FeedbackLaw make_feedback_law(const Network& net, const Decomposition& grid, const std::vector<KernelSpec>& kernels,
                              std::shared_ptr<const ReferenceBundle> bundle, Point x0, Point w, ZetaProfile zeta);

struct FeedbackTerms {
  Point coupling;  // f_i(chi_i, chi_j) - f_i(x_i, x_j)
  Point initial;   // (x_G - x0) / dt
  Point planning;  // zeta(t) w
  Point total() const { return coupling + initial + planning; }
};

FeedbackTerms feedback_terms(const FeedbackLaw& law, double t, const Point& xi, std::span<const Point> xj);
Point feedback(const FeedbackLaw& law, double t, const Point& xi, std::span<const Point> xj);

// w = (target - chi_i(dt)) / int_0^dt zeta; throws when the target lies outside the planning ball.
Point w_for_target(const ReferenceBundle& bundle, const ZetaProfile& zeta, double v_max, const Point& target);

// Closed-loop solution, independent of the neighbors' behavior.
Point analytic_state(const FeedbackLaw& law, double t);

struct Trajectory {
  std::vector<AgentId> agents;
  std::vector<double> times;
  std::vector<std::vector<Point>> states;    // [agent slot][sample]
  std::vector<std::vector<Point>> controls;  // [agent slot][sample]
};

// Disturbance for neighbor slot s (aligned with law.neighbors) at time t.
using Disturbance = std::function<Point(std::size_t slot, double t)>;

struct DisturbedRun {
  Trajectory trajectory;
  std::vector<Point> analytic;
  double max_gap = 0.0;       // sup-norm distance numeric vs analytic over samples
  double max_control = 0.0;   // over samples and integrator stages
};

DisturbedRun simulate_disturbed(const FeedbackLaw& law, const Disturbance& d, std::size_t steps = 64);

struct TubeSpec {
  double alpha_slope = 0.0;  // alpha(t) = alpha_slope * t
  double d_max = 0.0, dt = 0.0, lambda_hi = 0.0, v_max = 0.0;
  double alpha(double t) const { return alpha_slope * t; }
  double beta(double t) const { return d_max * (dt - t) / (2.0 * dt) + lambda_hi * v_max * t; }
};

TubeSpec tube_for_agent(const DiscretizationPlan& plan, const ClosureReport& closure, AgentId i, ZetaMode mode);

struct ConsistencyProblem {
  std::shared_ptr<const ReferenceBundle> bundle;
  KernelSpec kernel;
  std::vector<AgentId> neighbors;
  Point cell_lower, cell_upper;
  ZetaProfile zeta;
  Point target;
  CellIndex target_cell = 0;
  Point target_lower, target_upper;
  TubeSpec tube;
};

ConsistencyProblem make_consistency_problem(const Network& net, const Decomposition& grid,
                                            const std::vector<KernelSpec>& kernels,
                                            std::shared_ptr<const ReferenceBundle> bundle, const ZetaProfile& zeta,
                                            const TubeSpec& tube, const Point& target);

struct ConsistencyOptions {
  std::size_t disturbance_trials = 64;
  std::size_t initial_conditions = 64;  // used when ic_grid_per_axis == 0
  std::size_t ic_grid_per_axis = 0;     // k^n interior grid of initial states
  bool cross = false;                   // every (initial state, disturbance) pair
  std::uint64_t seed = 1;
  std::size_t steps = 64;
  bool parallel = false;
};

struct ConsistencyReport {
  std::string label = "sampled verification";
  std::size_t runs = 0;
  double worst_tube_margin = kUnbounded;     // min over samples of beta - |x - chi|
  double worst_arrival_error = 0.0;          // max |x(dt) - target|
  double max_control = 0.0;
  double worst_control_margin = kUnbounded;  // v_max - max |k|
  bool target_in_cell = true;
  bool passed = true;
  std::vector<std::string> failures;         // first few witnesses
};

ConsistencyReport check_consistency(const ConsistencyProblem& problem, const ConsistencyOptions& options);

// Per-agent driver for the coupled network: a feedback law or a constant direct input.
struct AgentDrive {
  std::optional<FeedbackLaw> law;
  Point direct_input;
};

struct AgentRunSummary {
  AgentId agent = 0;
  bool direct = false;
  double arrival_error = 0.0;     // feedback agents only
  double max_control = 0.0;
  double min_tube_margin = kUnbounded;
};

struct NetworkRun {
  Trajectory trajectory;
  std::vector<AgentRunSummary> agents;
};

NetworkRun simulate_network(const Network& net, const std::vector<KernelSpec>& kernels,
                            const std::vector<AgentDrive>& drives, const std::vector<Point>& initial, double dt,
                            const std::vector<Point>& targets, const TubeSpec* tube = nullptr,
                            std::size_t steps = 64);

// Piecewise-linear replay of recorded neighbor states.
Disturbance recorded_disturbance(const Trajectory& traj, const std::vector<AgentId>& neighbors);

}  // namespace decabs
