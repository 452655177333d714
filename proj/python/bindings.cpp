#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "decabs/scenario.hpp"

namespace py = pybind11;
using namespace decabs;

namespace {

// Scenario plus the model built from it; JSON crosses the boundary as text.
struct Session {
  Scenario scenario;
  BuiltModel built;

  Session(Scenario s, BuiltModel b) : scenario(std::move(s)), built(std::move(b)) {}
  Session(const Session&) = delete;

  std::string summary() const { return model_summary(*built.model).dump(); }

  std::vector<CellIndex> post(std::size_t agent, std::optional<std::vector<CellIndex>> cells) const {
    const Model& m = *built.model;
    if (agent < 1 || agent > m.network.size()) throw std::invalid_argument("unknown agent");
    auto cfg = project(m.network, built.initial_cells, agent - 1, m.plan.m);
    if (cells) cfg.cells = *cells;
    return built.systems[agent - 1].post(cfg);
  }

  std::vector<std::vector<std::vector<CellIndex>>> reach_frontiers(std::optional<std::size_t> steps) const {
    auto scripts = scenario.scripts;
    for (std::size_t i = 0; i < scripts.size(); ++i) scripts[i].initial_state = built.initial_states[i];
    auto res = reach(built.systems, built.initial_cells, steps.value_or(built.horizon_steps), scripts);
    std::vector<std::vector<std::vector<CellIndex>>> out;
    for (auto& f : res.frontiers) out.push_back(f.cells);
    return out;
  }
};

std::unique_ptr<Session> open(const std::string& text, bool is_path, std::optional<std::string> zeta) {
  Scenario s = is_path ? load_scenario(text) : parse_scenario(nlohmann::json::parse(text));
  if (zeta) s.zeta = zeta_mode_from_string(*zeta);
  auto b = build_model(s);
  return std::make_unique<Session>(std::move(s), std::move(b));
}

}  // namespace

PYBIND11_MODULE(_decabs, m) {
  m.doc() = "Decentralized abstractions for coupled multi-agent systems";

  py::register_exception<PlanError>(m, "PlanError", PyExc_ValueError);
  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);

  m.def("level_sets", [](const std::vector<std::vector<AgentId>>& neighbors, AgentId agent, std::size_t mm) {
    return Network(neighbors).level_sets(agent, mm).levels;
  }, py::arg("neighbors"), py::arg("agent"), py::arg("m"), "Level sets of a 0-based agent; neighbors[i] lists N_i.");
  m.def("t_star", &t_star, py::arg("L1"), py::arg("L2"), py::arg("n_max"));
  m.def("t_bar", &t_bar, py::arg("L1"), py::arg("L2"), py::arg("n_max"), py::arg("c_bar"));
  m.def("horizon_root", [](double L1, double L2, std::size_t n, double c) {
    auto r = horizon_root(L1, L2, n, c);
    return py::make_tuple(r.value, r.residual);
  }, py::arg("L1"), py::arg("L2"), py::arg("n_max"), py::arg("c_bar"));
  m.def("H", &H, py::arg("kappa"), py::arg("t"), py::arg("M"), py::arg("L1"), py::arg("L2"), py::arg("n_max"));

  py::class_<Session>(m, "Session")
      .def("summary_json", &Session::summary)
      .def("post", &Session::post, py::arg("agent"), py::arg("cells") = std::nullopt)
      .def("reach", &Session::reach_frontiers, py::arg("steps") = std::nullopt)
      .def_property_readonly("initial_cells", [](const Session& s) { return s.built.initial_cells; })
      .def_property_readonly("horizon_steps", [](const Session& s) { return s.built.horizon_steps; });
  m.def("open", &open, py::arg("text"), py::arg("is_path"), py::arg("zeta") = std::nullopt);
}
