#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace decabs {

using AgentId = std::size_t;
using CellIndex = std::size_t;

struct NetworkError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// levels[k] holds the agents at exact graph distance k from `agent` (ascending).
struct LevelSets {
  AgentId agent = 0;
  std::size_t degree = 0;
  std::vector<std::vector<AgentId>> levels;

  std::vector<AgentId> closure() const;  // union of all levels, ascending
  std::vector<AgentId> closure_up_to(std::size_t k) const;
  bool contains(AgentId a) const;
  std::optional<std::size_t> level_of(AgentId a) const;
  bool outermost_empty() const { return levels.back().empty(); }
};

// Concatenation of the level sets: agent first, then level 1, level 2, ...
struct Ordering {
  AgentId agent = 0;
  std::size_t degree = 0;
  std::vector<AgentId> sequence;
  std::vector<std::size_t> level_sizes;

  std::size_t size() const { return sequence.size(); }
  std::optional<std::size_t> position_of(AgentId a) const;
  std::size_t level_of_position(std::size_t pos) const;
};

// Cell indices of an agent and its m-neighbor set, aligned with Ordering::sequence.
struct MCellConfig {
  AgentId agent = 0;
  std::size_t degree = 0;
  std::vector<CellIndex> cells;

  auto operator<=>(const MCellConfig&) const = default;
};

class Network {
 public:
  Network() = default;
  // neighbors[i] lists N_i; the listed order fixes the neighbor tuple j(i).
  explicit Network(std::vector<std::vector<AgentId>> neighbors);

  std::size_t size() const { return neighbors_.size(); }
  std::span<const AgentId> neighbors(AgentId i) const { return neighbors_.at(i); }
  std::size_t in_degree(AgentId i) const { return neighbors_.at(i).size(); }
  std::size_t max_in_degree() const;
  bool is_neighbor(AgentId i, AgentId l) const;

  LevelSets level_sets(AgentId i, std::size_t m) const;
  Ordering ordering(AgentId i, std::size_t m) const;

 private:
  std::vector<std::vector<AgentId>> neighbors_;
};

MCellConfig project(const Network& net, std::span<const CellIndex> full, AgentId i, std::size_t m);

// Both configurations must assign the same cell to every agent they share.
bool is_consistent(const Network& net, const MCellConfig& a, const MCellConfig& b);

struct AgentClosure {
  AgentId agent = 0;
  bool next_shell_empty = false;       // N_i^{m+1} empty
  bool neighbor_closures_nested = true;  // N̄_l^{m-1} ⊆ N̄_i^m for l in N_i
  bool inner_neighbors_covered = true;   // N_l ⊆ N̄_i^{m+1} for l in N̄_i^m
  bool closed_under_neighbors = true;    // N_l ⊆ N̄_i^m when the next shell is empty
  bool decoupled = false;               // next shell empty for i and all of N_i
};

struct ClosureReport {
  std::size_t degree = 0;
  std::vector<AgentClosure> agents;

  bool all_closed() const;
  bool inclusions_hold() const;
};

ClosureReport closure_report(const Network& net, std::size_t m);

}  // namespace decabs
