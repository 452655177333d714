// Command line front end: plan, post, reach, simulate, verify, selftest.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "decabs/parallel.hpp"
#include "decabs/scenario.hpp"

namespace fs = std::filesystem;
using namespace decabs;
using nlohmann::json;

namespace {

struct Common {
  std::string scenario;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cc_trials;
  std::optional<std::size_t> ode_divisor;
  std::optional<int> theorem;
  std::optional<std::string> zeta;
  bool allow_lambda_hi_one = false;
};

void add_common(CLI::App* app, Common& c, bool needs_scenario = true) {
  if (needs_scenario) app->add_option("scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory");
  app->add_option("--seed", c.seed, "sampling seed");
  app->add_option("--cc-trials", c.cc_trials, "disturbance realizations per consistency check")->check(CLI::PositiveNumber);
  app->add_option("--ode-step-divisor", c.ode_divisor, "RK4 substeps per time step")->check(CLI::PositiveNumber);
  app->add_option("--theorem", c.theorem, "1: coupled deviation plan, 2: decoupled plan")->check(CLI::IsMember({1, 2}));
  app->add_option("--zeta", c.zeta, "planning profile")->check(CLI::IsMember({"constant", "corollary"}));
  app->add_flag("--allow-lambda-hi-one", c.allow_lambda_hi_one, "accept lambda_hi = 1");
}

Scenario load(const Common& c) {
  Scenario s = load_scenario(c.scenario);
  Overrides o;
  if (c.theorem) o.theorem = *c.theorem == 1 ? Theorem::one : Theorem::two;
  if (c.zeta) o.zeta = zeta_mode_from_string(*c.zeta);
  o.seed = c.seed;
  o.cc_trials = c.cc_trials;
  o.ode_step_divisor = c.ode_divisor;
  o.allow_lambda_hi_one = c.allow_lambda_hi_one;
  apply_overrides(s, o);
  return s;
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  f << j.dump(2) << "\n";
}

std::string real(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::vector<AgentScript> scripts_with_states(const Scenario& s, const BuiltModel& bm) {
  auto out = s.scripts;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].initial_state = bm.initial_states[i];
  return out;
}

json config_json(const Model& m, const MCellConfig& cfg) {
  auto ord = m.network.ordering(cfg.agent, cfg.degree);
  json a = json::array();
  for (std::size_t p = 0; p < ord.size(); ++p) a.push_back({{"agent", ord.sequence[p] + 1}, {"cell", cfg.cells[p]}});
  return a;
}

json header(const Scenario& s, const Model& m) {
  json j = model_summary(m);
  j["seed"] = s.seed;
  j["cc_trials"] = s.cc_trials;
  return j;
}

int cmd_plan(const Common& c) {
  Scenario s = load(c);
  BuiltModel bm = build_model(s);
  const auto& p = bm.model->plan;
  json j = header(s, *bm.model);
  write_json(fs::path(c.out) / "plan.json", j);
  std::cout << "theorem " << static_cast<int>(p.theorem) << ": dt = " << real(p.dt) << " (bound " << real(p.dt_upper)
            << ", " << p.dt_binding << " branch), d_max bound = " << real(p.d_max_upper) << " (" << p.d_max_binding
            << "-time branch binds), grid diameter = " << real(p.d_max) << ", radius = " << real(p.radius) << "\n";
  return 0;
}

std::vector<CellIndex> parse_cells(const std::string& text) {
  std::vector<CellIndex> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<CellIndex>(std::stoull(tok)));
  return out;
}

int cmd_post(const Common& c, std::size_t agent, const std::string& cells) {
  Scenario s = load(c);
  BuiltModel bm = build_model(s);
  const Model& m = *bm.model;
  if (agent < 1 || agent > m.network.size()) throw ScenarioError("--agent names an unknown agent");
  const AgentId i = agent - 1;
  MCellConfig cfg = project(m.network, bm.initial_cells, i, m.plan.m);
  if (!cells.empty()) {
    cfg.cells = parse_cells(cells);
    if (cfg.cells.size() != m.network.ordering(i, m.plan.m).size())
      throw ScenarioError("--config must list one cell per member of the m-neighborhood, in ordering");
  }
  const auto& ts = bm.systems[i];
  auto b = ts.bundle(cfg);
  auto post = ts.post(cfg);
  json j = header(s, m);
  j["agent"] = agent;
  j["configuration"] = config_json(m, cfg);
  j["reference_case"] = b->reference_case() == ReferenceCase::closed ? "closed" : "frozen";
  j["center"] = to_json(b->endpoint(i));
  j["radius"] = ts.radius();
  j["cells"] = post;
  j["truncated"] = ts.post_truncated(cfg);
  j["label"] = "certified subset of Post";
  write_json(fs::path(c.out) / ("post_agent" + std::to_string(agent) + ".json"), j);
  std::cout << "agent " << agent << ": " << post.size() << " cells in Post\n";
  return 0;
}

void write_occupancy(const fs::path& p, const Decomposition& g, const std::vector<CellIndex>& cells) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p);
  f << "cell";
  for (int k = 0; k < g.dim(); ++k) f << ",i" << k;
  for (int k = 0; k < g.dim(); ++k) f << ",x" << k;
  f << ",occupied\n";
  std::vector<char> in(g.cell_count(), 0);
  for (CellIndex c : cells) in[c] = 1;
  for (CellIndex l = 0; l < g.cell_count(); ++l) {
    f << l;
    for (auto x : g.coords(l)) f << "," << x;
    Point r = g.reference_point(l);
    for (int k = 0; k < g.dim(); ++k) f << "," << real(r[k]);
    f << "," << static_cast<int>(in[l]) << "\n";
  }
}

int cmd_reach(const Common& c, std::optional<std::size_t> steps) {
  Scenario s = load(c);
  BuiltModel bm = build_model(s);
  const Model& m = *bm.model;
  std::size_t horizon = steps ? *steps : bm.horizon_steps;
  auto scripts = scripts_with_states(s, bm);
  auto res = reach(bm.systems, bm.initial_cells, horizon, scripts);
  json j = header(s, m);
  j["horizon_steps"] = horizon;
  json init = json::array();
  for (AgentId i = 0; i < m.network.size(); ++i) init.push_back({{"agent", i + 1}, {"cells", res.frontiers[0].cells[i]}});
  j["initial"] = init;
  json recs = json::array();
  for (std::size_t k = 1; k < res.frontiers.size(); ++k) {
    json agents = json::array();
    for (AgentId i = 0; i < m.network.size(); ++i) {
      json a = {{"agent", i + 1}, {"cells", res.frontiers[k].cells[i]}, {"count", res.frontiers[k].cells[i].size()}};
      if (!res.paths[i].empty()) a["path_cell"] = res.paths[i][k];
      agents.push_back(a);
    }
    recs.push_back({{"step", k}, {"time", m.plan.dt * static_cast<double>(k)}, {"agents", agents}});
  }
  j["steps"] = recs;
  json paths = json::object();
  for (AgentId i = 0; i < m.network.size(); ++i)
    if (!res.paths[i].empty()) paths[std::to_string(i + 1)] = res.paths[i];
  j["paths"] = paths;
  j["configurations_evaluated"] = res.posts.size();
  j["truncation_warnings"] = res.truncation_warnings;
  write_json(fs::path(c.out) / "reach.json", j);
  std::size_t files = 0;
  for (AgentId i = 0; i < m.network.size(); ++i) {
    if (scripts[i].kind == AgentScript::Kind::velocity) continue;
    for (std::size_t k = 1; k < res.frontiers.size(); ++k, ++files)
      write_occupancy(fs::path(c.out) / "occupancy" /
                          ("agent" + std::to_string(i + 1) + "_step" + std::to_string(k) + ".csv"),
                      m.grid, res.frontiers[k].cells[i]);
  }
  std::cout << horizon << " steps, " << res.posts.size() << " configurations, " << files << " occupancy files, "
            << std::fixed << std::setprecision(2) << res.seconds << " s";
  if (res.truncation_warnings) std::cout << ", warning: " << res.truncation_warnings << " planning balls cross the workspace boundary";
  std::cout << "\n";
  return 0;
}

int cmd_simulate(const Common& c, std::optional<std::size_t> steps) {
  Scenario s = load(c);
  BuiltModel bm = build_model(s);
  const Model& m = *bm.model;
  const std::size_t n = m.network.size();
  std::size_t horizon = steps ? *steps : bm.horizon_steps;
  auto scripts = scripts_with_states(s, bm);
  std::vector<Point> x = bm.initial_states;
  fs::create_directories(c.out);
  std::ofstream csv(fs::path(c.out) / "trajectory.csv");
  csv << "step,t,agent";
  for (int k = 0; k < m.grid.dim(); ++k) csv << ",x" << k;
  for (int k = 0; k < m.grid.dim(); ++k) csv << ",k" << k;
  csv << ",k_norm\n";
  json records = json::array();
  bool ok = true;
  const std::size_t sub = m.ode_divisor;
  for (std::size_t step = 0; step < horizon; ++step) {
    std::vector<std::optional<Point>> targets(n);
    auto res = simulate_step(bm.systems, x, targets, scripts, sub);
    const auto& tr = res.run.trajectory;
    for (std::size_t q = 0; q < tr.times.size(); ++q) {
      if (step > 0 && q == 0) continue;
      double t = m.plan.dt * static_cast<double>(step) + tr.times[q];
      for (AgentId i = 0; i < n; ++i) {
        csv << step << "," << real(t) << "," << i + 1;
        for (int k = 0; k < m.grid.dim(); ++k) csv << "," << real(tr.states[i][q][k]);
        for (int k = 0; k < m.grid.dim(); ++k) csv << "," << real(tr.controls[i][q][k]);
        csv << "," << real(tr.controls[i][q].norm()) << "\n";
      }
    }
    json agents = json::array();
    for (const auto& a : res.run.agents) {
      json r = {{"agent", a.agent + 1}, {"cell", res.config[a.agent]}, {"direct_input", a.direct}, {"max_control", a.max_control}};
      if (!a.direct) {
        r["arrival_error"] = a.arrival_error;
        r["tube_margin"] = number(a.min_tube_margin);
        r["target"] = to_json(res.targets[a.agent]);
        bool good = a.arrival_error <= 1e-6 && a.max_control <= m.plan.bounds.v_max + 1e-9 && a.min_tube_margin > 0.0;
        r["passed"] = good;
        ok = ok && good;
      }
      agents.push_back(r);
    }
    records.push_back({{"step", step}, {"agents", agents}});
    for (AgentId i = 0; i < n; ++i) x[i] = tr.states[i].back();
    bool inside = true;
    for (const auto& xi : x) inside = inside && m.grid.contains(xi);
    if (!inside) {
      records.push_back({{"step", step + 1}, {"stopped", "an agent left the workspace"}});
      break;
    }
  }
  json j = header(s, m);
  j["steps"] = records;
  j["all_feedback_agents_passed"] = ok;
  write_json(fs::path(c.out) / "simulate.json", j);
  std::cout << records.size() << " steps simulated, feedback agents " << (ok ? "met" : "did NOT meet")
            << " arrival, control and tube checks\n";
  return ok ? 0 : 3;
}

int cmd_verify(const Common& c, std::optional<std::size_t> agent) {
  Scenario s = load(c);
  BuiltModel bm = build_model(s);
  const Model& m = *bm.model;
  ConsistencyOptions o;
  o.seed = s.seed;
  o.disturbance_trials = s.cc_trials;
  o.initial_conditions = s.cc_trials;
  json j = header(s, m);
  json agents = json::array();
  bool ok = true;
  for (AgentId i = 0; i < m.network.size(); ++i) {
    if (agent && *agent != i + 1) continue;
    if (s.scripts[i].kind == AgentScript::Kind::velocity) continue;
    auto cfg = project(m.network, bm.initial_cells, i, m.plan.m);
    const auto& ts = bm.systems[i];
    auto cells = ts.post(cfg);
    std::vector<TransitionReport> reps(cells.size());
    parallel_for(cells.size(), [&](std::size_t k) { reps[k] = ts.verify_transition(cfg, cells[k], o); });
    json trans = json::array();
    for (const auto& r : reps) {
      trans.push_back({{"target", r.target}, {"witness", to_json(r.witness)}, {"w", to_json(r.w)},
                       {"report", to_json(r.consistency)}});
      ok = ok && r.passed();
    }
    agents.push_back({{"agent", i + 1}, {"configuration", config_json(m, cfg)}, {"transitions", trans}});
  }
  j["agents"] = agents;
  j["passed"] = ok;
  write_json(fs::path(c.out) / "verify.json", j);
  std::cout << "sampled verification " << (ok ? "passed" : "FAILED") << "\n";
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized abstractions for coupled multi-agent systems"};
  app.require_subcommand(1);
  Common c;
  std::size_t agent = 1;
  std::optional<std::size_t> verify_agent, steps;
  std::string cells;
  std::vector<int> only;

  auto* plan = app.add_subcommand("plan", "compute and validate the discretization plan");
  add_common(plan, c);
  auto* post = app.add_subcommand("post", "certified Post set for one agent and configuration");
  add_common(post, c);
  post->add_option("--agent", agent, "agent number (1-based)");
  post->add_option("--config", cells, "comma-separated cells of the m-neighborhood in ordering (default: initial cells)");
  auto* rch = app.add_subcommand("reach", "frontier propagation over the horizon");
  add_common(rch, c);
  rch->add_option("--steps", steps, "number of steps (default: from run.horizon)");
  auto* sim = app.add_subcommand("simulate", "closed-loop trajectories toward nominal targets");
  add_common(sim, c);
  sim->add_option("--steps", steps, "number of steps (default: from run.horizon)");
  auto* ver = app.add_subcommand("verify", "sampled consistency of every Post cell at the initial configuration");
  add_common(ver, c);
  ver->add_option("--agent", verify_agent, "restrict to one agent");
  auto* self = app.add_subcommand("selftest", "run the acceptance fixtures");
  add_common(self, c, false);
  self->add_option("--criterion", only, "criterion numbers to run");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*plan) return cmd_plan(c);
    if (*post) return cmd_post(c, agent, cells);
    if (*rch) return cmd_reach(c, steps);
    if (*sim) return cmd_simulate(c, steps);
    if (*ver) return cmd_verify(c, verify_agent);
    if (*self) {
      acceptance::Options o;
      o.only = only;
      if (c.seed) o.seed = *c.seed;
      bool ok = true;
      for (const auto& r : acceptance::run(o)) {
        std::cout << acceptance::line(r) << "\n";
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const PlanError& e) {
    std::cerr << "plan certificate failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
