#include "decabs/scenario.hpp"

#include <cmath>
#include <fstream>

namespace decabs {

using nlohmann::json;

namespace {

const json& need(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError("missing scenario key '" + path + "'");
  return j.at(key);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError("scenario key '" + path + "' must be a number");
  double x = j.get<double>();
  if (!std::isfinite(x)) throw ScenarioError("scenario key '" + path + "' must be finite");
  return x;
}

std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ScenarioError("scenario key '" + path + "' must be a nonnegative integer");
  return j.get<std::size_t>();
}

Point as_point(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ScenarioError("scenario key '" + path + "' must be a nonempty number array");
  if (j.size() > static_cast<std::size_t>(kMaxDim))
    throw ScenarioError("scenario key '" + path + "' exceeds the supported dimension " + std::to_string(kMaxDim));
  Point p(static_cast<int>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) p[static_cast<int>(k)] = as_number(j[k], path + "[" + std::to_string(k) + "]");
  return p;
}

std::optional<double> opt_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return as_number(j.at(key), path);
}

AgentId agent_ref(const json& j, std::size_t n, const std::string& path) {
  std::size_t a = as_count(j, path);
  if (a < 1 || a > n) throw ScenarioError("scenario key '" + path + "' names unknown agent " + std::to_string(a));
  return a - 1;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  Scenario s;
  s.source = j;
  const json& ws = need(j, "workspace", "workspace");
  s.lower = as_point(need(ws, "lower", "workspace.lower"), "workspace.lower");
  s.upper = as_point(need(ws, "upper", "workspace.upper"), "workspace.upper");
  if (s.lower.size() != s.upper.size()) throw ScenarioError("scenario keys 'workspace.lower' and 'workspace.upper' differ in length");
  if (ws.contains("cells_per_axis") && !ws.at("cells_per_axis").is_null()) {
    const json& c = ws.at("cells_per_axis");
    if (!c.is_array() || c.size() != static_cast<std::size_t>(s.lower.size()))
      throw ScenarioError("scenario key 'workspace.cells_per_axis' must list one count per axis");
    std::vector<std::size_t> v;
    for (std::size_t k = 0; k < c.size(); ++k) v.push_back(as_count(c[k], "workspace.cells_per_axis[" + std::to_string(k) + "]"));
    s.cells_per_axis = v;
  }

  const json& ag = need(j, "agents", "agents");
  if (!ag.is_array() || ag.empty()) throw ScenarioError("scenario key 'agents' must be a nonempty array");
  const std::size_t n = ag.size();
  s.agents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = "agents[" + std::to_string(i) + "]";
    const json& a = ag[i];
    auto& out = s.agents[i];
    std::string kind = need(a, "kernel", p + ".kernel").get<std::string>();
    try {
      out.kernel.kind = kernel_kind_from_string(kind);
    } catch (const std::exception&) {
      throw ScenarioError("scenario key '" + p + ".kernel' has unknown value '" + kind + "'");
    }
    if (a.contains("neighbors")) {
      const json& nb = a.at("neighbors");
      if (!nb.is_array()) throw ScenarioError("scenario key '" + p + ".neighbors' must be an array");
      for (std::size_t k = 0; k < nb.size(); ++k)
        out.neighbors.push_back(agent_ref(nb[k], n, p + ".neighbors[" + std::to_string(k) + "]"));
    }
    const json empty = json::object();
    const json& params = a.contains("params") ? a.at("params") : empty;
    if (out.kernel.kind == KernelKind::saturated_sum) out.kernel.rho = as_number(need(params, "rho", p + ".params.rho"), p + ".params.rho");
    if (out.kernel.kind == KernelKind::linear_diffusive) {
      const json& w = need(params, "weights", p + ".params.weights");
      if (!w.is_array()) throw ScenarioError("scenario key '" + p + ".params.weights' must be an array");
      for (std::size_t k = 0; k < w.size(); ++k)
        out.kernel.weights.push_back(as_number(w[k], p + ".params.weights[" + std::to_string(k) + "]"));
    }
    if (a.contains("initial_state") && !a.at("initial_state").is_null())
      out.initial_state = as_point(a.at("initial_state"), p + ".initial_state");
    if (a.contains("initial_cell") && !a.at("initial_cell").is_null())
      out.initial_cell = as_count(a.at("initial_cell"), p + ".initial_cell");
  }
  if (j.contains("edges")) {
    const json& e = j.at("edges");
    if (!e.is_array()) throw ScenarioError("scenario key 'edges' must be an array of [from, to] pairs");
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string p = "edges[" + std::to_string(k) + "]";
      if (!e[k].is_array() || e[k].size() != 2) throw ScenarioError("scenario key '" + p + "' must be a [from, to] pair");
      AgentId from = agent_ref(e[k][0], n, p + "[0]");
      AgentId to = agent_ref(e[k][1], n, p + "[1]");
      s.agents[to].neighbors.push_back(from);
    }
  }

  const json& b = need(j, "bounds", "bounds");
  s.v_max = as_number(need(b, "v_max", "bounds.v_max"), "bounds.v_max");
  s.M_override = opt_number(b, "M_override", "bounds.M_override");

  const json& pl = need(j, "plan", "plan");
  s.plan.lambda_lo = as_number(need(pl, "lambda_lo", "plan.lambda_lo"), "plan.lambda_lo");
  s.plan.lambda_hi = as_number(need(pl, "lambda_hi", "plan.lambda_hi"), "plan.lambda_hi");
  s.plan.m = as_count(need(pl, "m", "plan.m"), "plan.m");
  s.plan.c_bar = opt_number(pl, "c_bar", "plan.c_bar");
  s.plan.dt = opt_number(pl, "dt", "plan.dt");
  s.plan.d_max = opt_number(pl, "d_max", "plan.d_max");
  if (pl.contains("theorem")) {
    std::size_t t = as_count(pl.at("theorem"), "plan.theorem");
    if (t != 1 && t != 2) throw ScenarioError("scenario key 'plan.theorem' must be 1 or 2");
    s.plan.theorem = t == 1 ? Theorem::one : Theorem::two;
  }
  if (pl.contains("zeta")) {
    try {
      s.zeta = zeta_mode_from_string(pl.at("zeta").get<std::string>());
    } catch (const std::exception&) {
      throw ScenarioError("scenario key 'plan.zeta' must be \"constant\" or \"corollary\"");
    }
  }
  if (pl.contains("per_agent_constants")) s.per_agent_constants = pl.at("per_agent_constants").get<bool>();
  if (pl.contains("allow_lambda_hi_one")) s.plan.allow_lambda_hi_one = pl.at("allow_lambda_hi_one").get<bool>();

  s.scripts.assign(n, {});
  if (j.contains("run")) {
    const json& r = j.at("run");
    s.horizon = opt_number(r, "horizon", "run.horizon");
    if (r.contains("steps")) s.steps = as_count(r.at("steps"), "run.steps");
    if (r.contains("seed")) s.seed = as_count(r.at("seed"), "run.seed");
    if (r.contains("cc_trials")) s.cc_trials = as_count(r.at("cc_trials"), "run.cc_trials");
    if (r.contains("ode_step_divisor")) s.ode_step_divisor = as_count(r.at("ode_step_divisor"), "run.ode_step_divisor");
    if (r.contains("scripted")) {
      const json& sc = r.at("scripted");
      if (!sc.is_array()) throw ScenarioError("scenario key 'run.scripted' must be an array");
      for (std::size_t k = 0; k < sc.size(); ++k) {
        const std::string p = "run.scripted[" + std::to_string(k) + "]";
        AgentId a = agent_ref(need(sc[k], "agent", p + ".agent"), n, p + ".agent");
        auto& out = s.scripts[a];
        if (out.kind != AgentScript::Kind::free) throw ScenarioError("scenario key '" + p + "' scripts an agent twice");
        if (sc[k].contains("velocity")) {
          out.kind = AgentScript::Kind::velocity;
          out.velocity = as_point(sc[k].at("velocity"), p + ".velocity");
        } else if (sc[k].contains("cells")) {
          const json& c = sc[k].at("cells");
          if (c.is_string()) {
            if (c.get<std::string>() != "nominal") throw ScenarioError("scenario key '" + p + ".cells' must be a list or \"nominal\"");
            out.kind = AgentScript::Kind::nominal;
          } else {
            out.kind = AgentScript::Kind::cells;
            for (std::size_t q = 0; q < c.size(); ++q) out.cells.push_back(as_count(c[q], p + ".cells[" + std::to_string(q) + "]"));
          }
        } else {
          throw ScenarioError("scenario key '" + p + "' needs 'velocity' or 'cells'");
        }
      }
    }
  }
  if (s.ode_step_divisor == 0) throw ScenarioError("scenario key 'run.ode_step_divisor' must be positive");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("scenario file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_scenario(j);
}

void apply_overrides(Scenario& s, const Overrides& o) {
  if (o.theorem) s.plan.theorem = *o.theorem;
  if (o.zeta) s.zeta = *o.zeta;
  if (o.seed) s.seed = *o.seed;
  if (o.cc_trials) s.cc_trials = *o.cc_trials;
  if (o.ode_step_divisor) s.ode_step_divisor = *o.ode_step_divisor;
  if (o.allow_lambda_hi_one) s.plan.allow_lambda_hi_one = true;
}

BuiltModel build_model(const Scenario& s) {
  const std::size_t n = s.agents.size();
  std::vector<std::vector<AgentId>> nb;
  std::vector<KernelSpec> kernels;
  for (const auto& a : s.agents) {
    nb.push_back(a.neighbors);
    kernels.push_back(a.kernel);
  }
  auto model = std::make_shared<Model>();
  model->network = Network(nb);
  model->kernels = kernels;
  Decomposition box(s.lower, s.upper, std::vector<std::size_t>(static_cast<std::size_t>(s.lower.size()), 1));
  model->bounds = derive_bounds(model->network, kernels, s.v_max, s.M_override, &box, static_cast<unsigned>(s.seed));
  model->closure = closure_report(model->network, s.plan.m);
  model->plan = make_plan(model->bounds, s.plan, model->closure);
  std::vector<std::size_t> cells =
      s.cells_per_axis ? *s.cells_per_axis : cells_for_diameter(s.lower, s.upper, model->plan.d_max);
  model->grid = Decomposition(s.lower, s.upper, cells);
  if (model->grid.diameter() > model->plan.d_max * (1.0 + 1e-12))
    throw PlanError("workspace.cells_per_axis gives cell diameter " + std::to_string(model->grid.diameter()) +
                    " above the planned d_max " + std::to_string(model->plan.d_max));
  adopt_grid_diameter(model->plan, model->grid.diameter());
  model->zeta_mode = s.zeta;
  model->per_agent_constants = s.per_agent_constants;
  model->ode_divisor = s.ode_step_divisor;

  BuiltModel out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = s.agents[i];
    const std::string p = "agents[" + std::to_string(i) + "]";
    CellIndex c;
    if (a.initial_state) {
      if (a.initial_state->size() != model->grid.dim()) throw ScenarioError("scenario key '" + p + ".initial_state' has the wrong dimension");
      if (!model->grid.contains(*a.initial_state)) throw ScenarioError("scenario key '" + p + ".initial_state' lies outside the workspace");
      c = model->grid.locate(*a.initial_state);
      if (a.initial_cell && *a.initial_cell != c) throw ScenarioError("scenario key '" + p + ".initial_cell' disagrees with initial_state");
      out.initial_states.push_back(*a.initial_state);
    } else if (a.initial_cell) {
      c = *a.initial_cell;
      if (c >= model->grid.cell_count()) throw ScenarioError("scenario key '" + p + ".initial_cell' is out of range");
      out.initial_states.push_back(model->grid.reference_point(c));
    } else {
      throw ScenarioError("missing scenario key '" + p + ".initial_state'");
    }
    out.initial_cells.push_back(c);
  }
  if (s.steps)
    out.horizon_steps = *s.steps;
  else if (s.horizon)
    out.horizon_steps = static_cast<std::size_t>(std::floor(*s.horizon / model->plan.dt + 1e-9));
  out.model = model;
  out.systems = make_transition_systems(model);
  return out;
}

json number(double x) {
  if (std::isinf(x)) return "unbounded";
  return x;
}

json to_json(const Point& p) {
  json a = json::array();
  for (int k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

json to_json(const SystemBounds& b) {
  json j;
  j["M"] = b.M;
  j["M_overridden"] = b.M_overridden;
  j["L1"] = b.L1;
  j["L2"] = b.L2;
  j["v_max"] = b.v_max;
  j["N_max"] = b.n_max;
  json per = json::array();
  for (std::size_t i = 0; i < b.agents.size(); ++i)
    per.push_back({{"agent", i + 1}, {"M", b.agents[i].M}, {"L1", b.agents[i].L1}, {"L2", b.agents[i].L2}});
  j["agents"] = per;
  return j;
}

json to_json(const DiscretizationPlan& p) {
  json j;
  j["theorem"] = static_cast<int>(p.theorem);
  j["m"] = p.m;
  j["lambda_lo"] = p.lambda_lo;
  j["lambda_hi"] = p.lambda_hi;
  j["c_bar"] = p.c_bar;
  j["c"] = p.c;
  j["K"] = p.K;
  j["t_star"] = number(p.t_star);
  j["t_bar"] = number(p.t_bar);
  j["dt"] = p.dt;
  j["dt_upper"] = number(p.dt_upper);
  j["dt_control_branch"] = number(p.dt_control_branch);
  j["dt_binding"] = p.dt_binding;
  j["d_max"] = p.d_max;
  j["d_max_upper"] = p.d_max_upper;
  j["d_max_initial_branch"] = p.d_max_initial_branch;
  j["d_max_final_branch"] = p.d_max_final_branch;
  j["d_max_binding"] = p.d_max_binding;
  j["radius"] = p.radius;
  j["A_left"] = p.a_left;
  j["A_right_coupled"] = p.a_right_coupled;
  j["A_right_decoupled"] = p.a_right_decoupled;
  j["bounds"] = to_json(p.bounds);
  return j;
}

json to_json(const ClosureReport& c) {
  json j;
  j["m"] = c.degree;
  j["all_next_shells_empty"] = c.all_closed();
  j["inclusions_hold"] = c.inclusions_hold();
  json a = json::array();
  for (const auto& x : c.agents)
    a.push_back({{"agent", x.agent + 1},
                 {"next_shell_empty", x.next_shell_empty},
                 {"decoupled", x.decoupled},
                 {"neighbor_closures_nested", x.neighbor_closures_nested},
                 {"inner_neighbors_covered", x.inner_neighbors_covered},
                 {"closed_under_neighbors", x.closed_under_neighbors}});
  j["agents"] = a;
  return j;
}

json to_json(const ConsistencyReport& r) {
  json j;
  j["label"] = r.label;
  j["runs"] = r.runs;
  j["passed"] = r.passed;
  j["worst_tube_margin"] = number(r.worst_tube_margin);
  j["worst_arrival_error"] = r.worst_arrival_error;
  j["max_control"] = r.max_control;
  j["worst_control_margin"] = number(r.worst_control_margin);
  j["target_in_cell"] = r.target_in_cell;
  j["failures"] = r.failures;
  return j;
}

json model_summary(const Model& m) {
  json j;
  j["plan"] = to_json(m.plan);
  j["closure"] = to_json(m.closure);
  j["zeta"] = to_string(m.zeta_mode);
  j["per_agent_constants"] = m.per_agent_constants;
  j["ode_step_divisor"] = m.ode_divisor;
  json g;
  g["lower"] = to_json(m.grid.lower());
  g["upper"] = to_json(m.grid.upper());
  g["cells_per_axis"] = m.grid.cells_per_axis();
  g["cell_side"] = to_json(m.grid.side());
  g["diameter"] = m.grid.diameter();
  j["grid"] = g;
  json radii = json::array();
  for (AgentId i = 0; i < m.network.size(); ++i) {
    auto z = m.zeta(i);
    json a = {{"agent", i + 1}, {"radius", z.radius()}};
    if (z.mode() == ZetaMode::corollary) {
      a["A_left"] = z.a_left();
      a["A_right"] = z.a_right();
      a["decoupled"] = z.decoupled();
    }
    radii.push_back(a);
  }
  j["agents"] = radii;
  if (m.per_agent_constants) j["note"] = "per-agent constants are an unproven refinement";
  return j;
}

}  // namespace decabs
