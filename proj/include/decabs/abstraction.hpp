#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "decabs/bounds.hpp"
#include "decabs/control.hpp"
#include "decabs/decomposition.hpp"
#include "decabs/dynamics.hpp"
#include "decabs/network.hpp"
#include "decabs/reftraj.hpp"

namespace decabs {

struct AbstractionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Everything a transition system needs; immutable once built.
struct Model {
  Network network;
  Decomposition grid;
  std::vector<KernelSpec> kernels;
  SystemBounds bounds;
  DiscretizationPlan plan;
  ClosureReport closure;
  ZetaMode zeta_mode = ZetaMode::constant;
  bool per_agent_constants = false;
  std::size_t ode_divisor = 64;

  ZetaProfile zeta(AgentId i) const;
  TubeSpec tube(AgentId i) const { return tube_for_agent(plan, closure, i, zeta_mode); }
};

struct TransitionReport {
  AgentId agent = 0;
  MCellConfig config;
  CellIndex target = 0;
  Point witness;
  Point w;
  ConsistencyReport consistency;
  bool passed() const { return consistency.passed; }
};

// Lazy transition system of one agent: configurations are materialized on demand.
class TransitionSystem {
 public:
  TransitionSystem(std::shared_ptr<const Model> model, AgentId agent);

  AgentId agent() const { return agent_; }
  const Model& model() const { return *model_; }
  const ZetaProfile& zeta() const { return zeta_; }
  double radius() const { return zeta_.radius(); }

  std::shared_ptr<const ReferenceBundle> bundle(const MCellConfig& cfg) const;
  std::vector<CellIndex> post(const MCellConfig& cfg) const;
  std::vector<CellIndex> compute_post(const MCellConfig& cfg) const;  // bypasses the cache
  std::size_t cache_size() const;
  bool post_truncated(const MCellConfig& cfg) const;

  TransitionReport verify_transition(const MCellConfig& cfg, CellIndex target, const ConsistencyOptions& opts) const;

 private:
  void check_config(const MCellConfig& cfg) const;

  std::shared_ptr<const Model> model_;
  AgentId agent_;
  ZetaProfile zeta_;
  struct Cache {
    std::mutex mutex;
    std::map<std::vector<CellIndex>, std::shared_ptr<const ReferenceBundle>> bundles;
    std::map<std::vector<CellIndex>, std::vector<CellIndex>> posts;
  };
  std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
};

// Witness point of `target` for a transition: the cell point nearest chi_i(dt), moved just inside the cell.
Point transition_witness(const Decomposition& grid, const Point& center, double radius, CellIndex target);

struct AgentScript {
  enum class Kind { free, velocity, cells, nominal };
  Kind kind = Kind::free;
  Point velocity;                // velocity: constant free input
  Point initial_state;           // velocity: continuous start
  std::vector<CellIndex> cells;  // cells: commanded cell per step, starting at step 1
};

struct ReachFrontier {
  std::size_t step = 0;
  std::vector<std::vector<CellIndex>> cells;  // per agent, ascending
};

struct PostRecord {
  AgentId agent = 0;
  std::size_t step = 0;  // configuration drawn from frontier `step`
  MCellConfig config;
  std::vector<CellIndex> post;
};

struct ReachResult {
  std::vector<ReachFrontier> frontiers;  // horizon + 1 entries
  std::vector<std::vector<CellIndex>> paths;  // per agent: scripted cell sequence (empty for free agents)
  std::vector<PostRecord> posts;         // every distinct configuration evaluated
  std::size_t truncation_warnings = 0;   // planning balls reaching past the workspace
  double seconds = 0.0;
};

struct ReachOptions {
  std::size_t max_configurations = 2'000'000;  // per agent and step
  bool record_posts = true;
};

std::vector<TransitionSystem> make_transition_systems(std::shared_ptr<const Model> model);

ReachResult reach(const std::vector<TransitionSystem>& ts, const std::vector<CellIndex>& initial_cells,
                  std::size_t horizon, const std::vector<AgentScript>& scripts, const ReachOptions& opts = {});

// Same, starting from sets of cells; scripted agents need a single initial cell.
ReachResult reach_sets(const std::vector<TransitionSystem>& ts, const std::vector<std::vector<CellIndex>>& initial,
                       std::size_t horizon, const std::vector<AgentScript>& scripts, const ReachOptions& opts = {});

// One synchronous step of the coupled closed loop from continuous states.
struct StepResult {
  std::vector<CellIndex> config;
  std::vector<Point> targets;
  NetworkRun run;
};

StepResult simulate_step(const std::vector<TransitionSystem>& ts, const std::vector<Point>& states,
                         const std::vector<std::optional<Point>>& targets, const std::vector<AgentScript>& scripts,
                         std::size_t steps);

}  // namespace decabs
