#include "decabs/abstraction.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "decabs/parallel.hpp"

namespace decabs {

ZetaProfile Model::zeta(AgentId i) const {
  if (zeta_mode == ZetaMode::constant) return ZetaProfile::constant(plan);
  return ZetaProfile::corollary(plan, network, closure, i, per_agent_constants);
}

TransitionSystem::TransitionSystem(std::shared_ptr<const Model> model, AgentId agent)
    : model_(std::move(model)), agent_(agent) {
  if (agent_ >= model_->network.size()) throw AbstractionError("agent index out of range");
  zeta_ = model_->zeta(agent_);
}

void TransitionSystem::check_config(const MCellConfig& cfg) const {
  if (cfg.agent != agent_) throw AbstractionError("configuration belongs to another agent");
  if (cfg.degree != model_->plan.m) throw AbstractionError("configuration degree differs from the plan's m");
  if (cfg.cells.size() != model_->network.ordering(agent_, cfg.degree).size())
    throw AbstractionError("configuration length does not match the m-neighborhood");
  for (CellIndex c : cfg.cells)
    if (c >= model_->grid.cell_count()) throw AbstractionError("configuration names an unknown cell");
}

std::shared_ptr<const ReferenceBundle> TransitionSystem::bundle(const MCellConfig& cfg) const {
  check_config(cfg);
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->bundles.find(cfg.cells);
    if (it != cache_->bundles.end()) return it->second;
  }
  const Model& m = *model_;
  auto b = std::make_shared<const ReferenceBundle>(
      solve_reference_ivp(m.network, m.grid, m.kernels, cfg, m.plan.dt, m.ode_divisor));
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->bundles.emplace(cfg.cells, std::move(b)).first->second;
}

std::vector<CellIndex> TransitionSystem::compute_post(const MCellConfig& cfg) const {
  check_config(cfg);
  const Model& m = *model_;
  ReferenceBundle b = solve_reference_ivp(m.network, m.grid, m.kernels, cfg, m.plan.dt, m.ode_divisor);
  return m.grid.cells_intersecting_ball(b.endpoint(agent_), zeta_.radius());
}

std::vector<CellIndex> TransitionSystem::post(const MCellConfig& cfg) const {
  {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto it = cache_->posts.find(cfg.cells);
    if (it != cache_->posts.end() && cfg.agent == agent_) return it->second;
  }
  auto b = bundle(cfg);
  auto cells = model_->grid.cells_intersecting_ball(b->endpoint(agent_), zeta_.radius());
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->posts.emplace(cfg.cells, std::move(cells)).first->second;
}

std::size_t TransitionSystem::cache_size() const {
  std::lock_guard<std::mutex> lock(cache_->mutex);
  return cache_->posts.size();
}

bool TransitionSystem::post_truncated(const MCellConfig& cfg) const {
  return model_->grid.ball_leaves_workspace(bundle(cfg)->endpoint(agent_), zeta_.radius());
}

Point transition_witness(const Decomposition& grid, const Point& center, double radius, CellIndex target) {
  Point p = grid.nearest_point(target, center);
  // Step off the face into the cell interior unless the ball only touches it.
  Point q = p + 1e-9 * (grid.reference_point(target) - p);
  return (q - center).norm() <= radius ? q : p;
}

TransitionReport TransitionSystem::verify_transition(const MCellConfig& cfg, CellIndex target,
                                                     const ConsistencyOptions& opts) const {
  auto cells = post(cfg);
  if (!std::binary_search(cells.begin(), cells.end(), target))
    throw AbstractionError("target cell " + std::to_string(target) + " is not in Post for this configuration");
  const Model& m = *model_;
  auto b = bundle(cfg);
  TransitionReport rep;
  rep.agent = agent_;
  rep.config = cfg;
  rep.target = target;
  rep.witness = transition_witness(m.grid, b->endpoint(agent_), zeta_.radius(), target);
  auto prob = make_consistency_problem(m.network, m.grid, m.kernels, b, zeta_, m.tube(agent_), rep.witness);
  prob.target_cell = target;
  prob.target_lower = m.grid.box_lower(target);
  prob.target_upper = m.grid.box_upper(target);
  rep.w = w_for_target(*b, zeta_, m.plan.bounds.v_max, rep.witness);
  rep.consistency = check_consistency(prob, opts);
  return rep;
}

std::vector<TransitionSystem> make_transition_systems(std::shared_ptr<const Model> model) {
  std::vector<TransitionSystem> out;
  out.reserve(model->network.size());
  for (AgentId i = 0; i < model->network.size(); ++i) out.emplace_back(model, i);
  return out;
}

namespace {

// Cartesian product of per-position cell sets.
std::vector<MCellConfig> configurations(AgentId agent, std::size_t m, const std::vector<std::vector<CellIndex>>& sets,
                                        std::size_t cap) {
  std::size_t total = 1;
  for (const auto& s : sets) {
    if (s.empty()) return {};
    if (total > cap / s.size()) throw AbstractionError("configuration product exceeds the enumeration limit");
    total *= s.size();
  }
  std::vector<MCellConfig> out;
  out.reserve(total);
  std::vector<std::size_t> idx(sets.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    MCellConfig c{agent, m, {}};
    c.cells.reserve(sets.size());
    for (std::size_t p = 0; p < sets.size(); ++p) c.cells.push_back(sets[p][idx[p]]);
    out.push_back(std::move(c));
    for (std::size_t p = sets.size(); p-- > 0;) {
      if (++idx[p] < sets[p].size()) break;
      idx[p] = 0;
    }
  }
  return out;
}

}  // namespace

ReachResult reach(const std::vector<TransitionSystem>& ts, const std::vector<CellIndex>& initial_cells,
                  std::size_t horizon, const std::vector<AgentScript>& scripts, const ReachOptions& opts) {
  std::vector<std::vector<CellIndex>> sets;
  for (CellIndex c : initial_cells) sets.push_back({c});
  return reach_sets(ts, sets, horizon, scripts, opts);
}

ReachResult reach_sets(const std::vector<TransitionSystem>& ts, const std::vector<std::vector<CellIndex>>& initial,
                       std::size_t horizon, const std::vector<AgentScript>& scripts_in, const ReachOptions& opts) {
  auto start = std::chrono::steady_clock::now();
  if (ts.empty()) throw AbstractionError("no transition systems");
  const Model& model = ts.front().model();
  const Network& net = model.network;
  const Decomposition& grid = model.grid;
  const std::size_t n = net.size();
  const std::size_t m = model.plan.m;
  const double dt = model.plan.dt;
  if (ts.size() != n || initial.size() != n) throw AbstractionError("one transition system and initial cell set per agent");
  std::vector<AgentScript> scripts = scripts_in;
  if (scripts.empty()) scripts.resize(n);
  if (scripts.size() != n) throw AbstractionError("one script entry per agent");
  std::vector<std::vector<CellIndex>> init(n);
  for (AgentId i = 0; i < n; ++i) {
    std::set<CellIndex> u(initial[i].begin(), initial[i].end());
    if (u.empty()) throw AbstractionError("agent " + std::to_string(i + 1) + " has an empty initial cell set");
    for (CellIndex c : u)
      if (c >= grid.cell_count()) throw AbstractionError("initial cell out of range");
    init[i].assign(u.begin(), u.end());
  }

  using Kind = AgentScript::Kind;
  for (AgentId i = 0; i < n; ++i) {
    const auto& s = scripts[i];
    if (s.kind == Kind::velocity) {
      if (net.in_degree(i) != 0 && model.kernels[i].kind != KernelKind::zero)
        throw AbstractionError("agent " + std::to_string(i + 1) + ": a velocity script needs uncoupled dynamics");
      if (s.velocity.size() != grid.dim() || s.initial_state.size() != grid.dim())
        throw AbstractionError("agent " + std::to_string(i + 1) + ": velocity script dimension mismatch");
      if (s.velocity.norm() > model.plan.bounds.v_max * (1.0 + 1e-12))
        throw AbstractionError("agent " + std::to_string(i + 1) + ": scripted velocity exceeds v_max");
      if (init[i].size() != 1 || grid.locate(s.initial_state) != init[i][0])
        throw AbstractionError("agent " + std::to_string(i + 1) + ": initial state is not in the initial cell");
    }
    if (s.kind != Kind::free && init[i].size() != 1)
      throw AbstractionError("agent " + std::to_string(i + 1) + ": a scripted agent needs a single initial cell");
    if (s.kind == Kind::cells && s.cells.size() < horizon)
      throw AbstractionError("agent " + std::to_string(i + 1) + ": scripted cell path is shorter than the horizon");
  }

  ReachResult res;
  res.paths.assign(n, {});
  for (AgentId i = 0; i < n; ++i)
    if (scripts[i].kind != Kind::free) res.paths[i] = {init[i][0]};
  ReachFrontier f0;
  f0.step = 0;
  f0.cells = init;
  res.frontiers.push_back(f0);

  std::vector<Ordering> orders;
  for (AgentId i = 0; i < n; ++i) orders.push_back(net.ordering(i, m));

  auto velocity_cell = [&](AgentId i, std::size_t k) {
    Point x = scripts[i].initial_state + (dt * static_cast<double>(k)) * scripts[i].velocity;
    if (!grid.contains(x))
      throw AbstractionError("agent " + std::to_string(i + 1) + " leaves the workspace at step " + std::to_string(k));
    return grid.locate(x);
  };

  for (std::size_t k = 0; k < horizon; ++k) {
    const auto& cur = res.frontiers.back();
    auto occupancy = [&](AgentId a) -> std::vector<CellIndex> {
      if (scripts[a].kind == Kind::free) return cur.cells[a];
      return {res.paths[a][k]};
    };
    struct Task {
      AgentId agent;
      MCellConfig cfg;
      bool own_free;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<MCellConfig>> path_cfgs(n);
    for (AgentId i = 0; i < n; ++i) {
      if (scripts[i].kind == Kind::velocity) continue;
      std::vector<std::vector<CellIndex>> sets;
      for (std::size_t p = 0; p < orders[i].size(); ++p)
        sets.push_back(p == 0 ? cur.cells[i] : occupancy(orders[i].sequence[p]));
      for (auto& c : configurations(i, m, sets, opts.max_configurations)) tasks.push_back({i, std::move(c), true});
      if (scripts[i].kind != Kind::free) {
        sets[0] = {res.paths[i][k]};
        path_cfgs[i] = configurations(i, m, sets, opts.max_configurations);
      }
    }
    std::vector<std::vector<CellIndex>> posts(tasks.size());
    std::vector<char> truncated(tasks.size(), 0);
    parallel_for(tasks.size(), [&](std::size_t t) {
      const auto& sys = ts[tasks[t].agent];
      posts[t] = sys.post(tasks[t].cfg);
      truncated[t] = sys.post_truncated(tasks[t].cfg) ? 1 : 0;
    });

    ReachFrontier next;
    next.step = k + 1;
    next.cells.assign(n, {});
    std::vector<std::set<CellIndex>> acc(n);
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      acc[tasks[t].agent].insert(posts[t].begin(), posts[t].end());
      res.truncation_warnings += truncated[t];
      if (opts.record_posts) res.posts.push_back({tasks[t].agent, k, tasks[t].cfg, posts[t]});
    }
    for (AgentId i = 0; i < n; ++i) {
      switch (scripts[i].kind) {
        case Kind::free:
          next.cells[i].assign(acc[i].begin(), acc[i].end());
          break;
        case Kind::velocity: {
          CellIndex c = velocity_cell(i, k + 1);
          next.cells[i] = {c};
          res.paths[i].push_back(c);
          break;
        }
        case Kind::cells: {
          CellIndex want = scripts[i].cells[k];
          for (const auto& cfg : path_cfgs[i]) {
            auto p = ts[i].post(cfg);
            if (!std::binary_search(p.begin(), p.end(), want))
              throw AbstractionError("agent " + std::to_string(i + 1) + ": scripted cell " + std::to_string(want) +
                                     " at step " + std::to_string(k + 1) + " is not in the computed Post set");
          }
          res.paths[i].push_back(want);
          next.cells[i].assign(acc[i].begin(), acc[i].end());
          break;
        }
        case Kind::nominal: {
          if (path_cfgs[i].size() != 1)
            throw AbstractionError("agent " + std::to_string(i + 1) +
                                   ": a nominal path needs every m-neighbor to follow a single cell");
          auto b = ts[i].bundle(path_cfgs[i][0]);
          const Point& end = b->endpoint(i);
          if (!grid.contains(end))
            throw AbstractionError("agent " + std::to_string(i + 1) + ": nominal path leaves the workspace");
          res.paths[i].push_back(grid.locate(end));
          next.cells[i].assign(acc[i].begin(), acc[i].end());
          break;
        }
      }
    }
    res.frontiers.push_back(std::move(next));
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

StepResult simulate_step(const std::vector<TransitionSystem>& ts, const std::vector<Point>& states,
                         const std::vector<std::optional<Point>>& targets, const std::vector<AgentScript>& scripts,
                         std::size_t steps) {
  const Model& model = ts.front().model();
  const std::size_t n = model.network.size();
  if (states.size() != n || targets.size() != n || scripts.size() != n)
    throw AbstractionError("one state, target and script per agent");
  StepResult out;
  for (const auto& x : states) {
    if (!model.grid.contains(x)) throw AbstractionError("state outside the workspace");
    out.config.push_back(model.grid.locate(x));
  }
  std::vector<AgentDrive> drives(n);
  out.targets.resize(n);
  for (AgentId i = 0; i < n; ++i) {
    if (scripts[i].kind == AgentScript::Kind::velocity) {
      drives[i].direct_input = scripts[i].velocity;
      out.targets[i] = states[i] + model.plan.dt * scripts[i].velocity;
      continue;
    }
    auto b = ts[i].bundle(project(model.network, out.config, i, model.plan.m));
    Point target = targets[i] ? *targets[i] : b->endpoint(i);
    Point w = w_for_target(*b, ts[i].zeta(), model.plan.bounds.v_max, target);
    drives[i].law = make_feedback_law(model.network, model.grid, model.kernels, b, states[i], w, ts[i].zeta());
    out.targets[i] = target;
  }
  TubeSpec tube = model.tube(0);
  out.run = simulate_network(model.network, model.kernels, drives, states, model.plan.dt, out.targets, &tube, steps);
  return out;
}

}  // namespace decabs
