#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "decabs/scenario.hpp"

namespace fixtures {

// Eight-agent graph from the decentralization example (0-based).
inline std::vector<std::vector<std::size_t>> example_graph() {
  return {{5, 1}, {2}, {1, 3}, {}, {2}, {0, 1, 4, 6}, {5, 7}, {6}};
}

// Four planar agents: 1 and 3 follow 2 through saturated coupling, 4 follows 3.
inline nlohmann::json four_agent_scenario() {
  return nlohmann::json::parse(R"({
    "workspace": {"lower": [-10, -10], "upper": [10, 10]},
    "agents": [
      {"kernel": "saturated_sum", "params": {"rho": 10}, "neighbors": [2], "initial_state": [9, 4]},
      {"kernel": "zero", "neighbors": [], "initial_state": [4, 4]},
      {"kernel": "saturated_sum", "params": {"rho": 10}, "neighbors": [2], "initial_state": [-6, 6]},
      {"kernel": "saturated_sum", "params": {"rho": 10}, "neighbors": [3], "initial_state": [-9, -4]}
    ],
    "bounds": {"v_max": 5},
    "plan": {"theorem": 2, "m": 2, "lambda_lo": 0.4, "lambda_hi": 1.0, "allow_lambda_hi_one": true},
    "run": {
      "horizon": 2.0, "seed": 1, "cc_trials": 64, "ode_step_divisor": 64,
      "scripted": [
        {"agent": 2, "velocity": [-1, -4]},
        {"agent": 3, "cells": "nominal"}
      ]
    }
  })");
}

inline decabs::BuiltModel four_agent_model(decabs::ZetaMode zeta = decabs::ZetaMode::constant) {
  auto s = decabs::parse_scenario(four_agent_scenario());
  s.zeta = zeta;
  return decabs::build_model(s);
}

inline decabs::AgentScript velocity_script(const decabs::Scenario& s, const decabs::BuiltModel& bm, std::size_t i) {
  auto sc = s.scripts[i];
  sc.initial_state = bm.initial_states[i];
  return sc;
}

// Scripts with continuous starts filled in.
inline std::vector<decabs::AgentScript> scripts_for(const decabs::Scenario& s, const decabs::BuiltModel& bm) {
  std::vector<decabs::AgentScript> out;
  for (std::size_t i = 0; i < s.scripts.size(); ++i) out.push_back(velocity_script(s, bm, i));
  return out;
}

// Random directed graph with at most max_in neighbors per agent.
inline std::vector<std::vector<std::size_t>> random_graph(std::size_t n, std::size_t max_in, std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> nb(n);
  std::uniform_int_distribution<std::size_t> deg(0, max_in);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> pool;
    for (std::size_t l = 0; l < n; ++l)
      if (l != i) pool.push_back(l);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::size_t k = std::min(deg(rng), pool.size());
    nb[i].assign(pool.begin(), pool.begin() + static_cast<long>(k));
  }
  return nb;
}

}  // namespace fixtures
