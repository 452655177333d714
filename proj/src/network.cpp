#include "decabs/network.hpp"

#include <algorithm>
#include <string>

namespace decabs {

namespace {

bool subset(const std::vector<AgentId>& a, const std::vector<AgentId>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<AgentId> sorted(std::span<const AgentId> s) {
  std::vector<AgentId> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::vector<AgentId> LevelSets::closure_up_to(std::size_t k) const {
  std::vector<AgentId> out;
  for (std::size_t d = 0; d <= k && d < levels.size(); ++d)
    out.insert(out.end(), levels[d].begin(), levels[d].end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AgentId> LevelSets::closure() const { return closure_up_to(degree); }

std::optional<std::size_t> LevelSets::level_of(AgentId a) const {
  for (std::size_t d = 0; d < levels.size(); ++d)
    if (std::binary_search(levels[d].begin(), levels[d].end(), a)) return d;
  return std::nullopt;
}

bool LevelSets::contains(AgentId a) const { return level_of(a).has_value(); }

std::optional<std::size_t> Ordering::position_of(AgentId a) const {
  auto it = std::find(sequence.begin(), sequence.end(), a);
  if (it == sequence.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sequence.begin());
}

std::size_t Ordering::level_of_position(std::size_t pos) const {
  std::size_t acc = 0;
  for (std::size_t d = 0; d < level_sizes.size(); ++d) {
    acc += level_sizes[d];
    if (pos < acc) return d;
  }
  throw std::out_of_range("ordering position out of range");
}

Network::Network(std::vector<std::vector<AgentId>> neighbors) : neighbors_(std::move(neighbors)) {
  const std::size_t n = neighbors_.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto s = sorted(neighbors_[i]);
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] >= n)
        throw NetworkError("agent " + std::to_string(i + 1) + " lists unknown neighbor " +
                           std::to_string(s[k] + 1));
      if (s[k] == i) throw NetworkError("agent " + std::to_string(i + 1) + " lists itself as a neighbor");
      if (k > 0 && s[k] == s[k - 1])
        throw NetworkError("agent " + std::to_string(i + 1) + " lists neighbor " + std::to_string(s[k] + 1) +
                           " twice");
    }
  }
}

std::size_t Network::max_in_degree() const {
  std::size_t best = 0;
  for (const auto& n : neighbors_) best = std::max(best, n.size());
  return best;
}

bool Network::is_neighbor(AgentId i, AgentId l) const {
  const auto& n = neighbors_.at(i);
  return std::find(n.begin(), n.end(), l) != n.end();
}

LevelSets Network::level_sets(AgentId i, std::size_t m) const {
  if (i >= size()) throw NetworkError("agent index out of range");
  LevelSets ls;
  ls.agent = i;
  ls.degree = m;
  ls.levels.assign(m + 1, {});
  std::vector<char> seen(size(), 0);
  seen[i] = 1;
  ls.levels[0] = {i};
  for (std::size_t d = 1; d <= m; ++d) {
    for (AgentId u : ls.levels[d - 1])
      for (AgentId l : neighbors_[u])
        if (!seen[l]) {
          seen[l] = 1;
          ls.levels[d].push_back(l);
        }
    std::sort(ls.levels[d].begin(), ls.levels[d].end());
  }
  return ls;
}

Ordering Network::ordering(AgentId i, std::size_t m) const {
  auto ls = level_sets(i, m);
  Ordering o;
  o.agent = i;
  o.degree = m;
  for (const auto& lvl : ls.levels) {
    o.sequence.insert(o.sequence.end(), lvl.begin(), lvl.end());
    o.level_sizes.push_back(lvl.size());
  }
  return o;
}

MCellConfig project(const Network& net, std::span<const CellIndex> full, AgentId i, std::size_t m) {
  if (full.size() != net.size()) throw NetworkError("full configuration has wrong length");
  auto o = net.ordering(i, m);
  MCellConfig c{i, m, {}};
  c.cells.reserve(o.size());
  for (AgentId a : o.sequence) c.cells.push_back(full[a]);
  return c;
}

bool is_consistent(const Network& net, const MCellConfig& a, const MCellConfig& b) {
  auto oa = net.ordering(a.agent, a.degree);
  auto ob = net.ordering(b.agent, b.degree);
  if (a.cells.size() != oa.size() || b.cells.size() != ob.size())
    throw NetworkError("configuration length does not match its ordering");
  for (std::size_t p = 0; p < oa.size(); ++p) {
    auto q = ob.position_of(oa.sequence[p]);
    if (q && b.cells[*q] != a.cells[p]) return false;
  }
  return true;
}

bool ClosureReport::all_closed() const {
  return std::all_of(agents.begin(), agents.end(), [](const AgentClosure& a) { return a.next_shell_empty; });
}

bool ClosureReport::inclusions_hold() const {
  return std::all_of(agents.begin(), agents.end(), [](const AgentClosure& a) {
    return a.neighbor_closures_nested && a.inner_neighbors_covered && a.closed_under_neighbors;
  });
}

ClosureReport closure_report(const Network& net, std::size_t m) {
  ClosureReport rep;
  rep.degree = m;
  std::vector<LevelSets> wide;
  for (AgentId i = 0; i < net.size(); ++i) wide.push_back(net.level_sets(i, m + 1));
  for (AgentId i = 0; i < net.size(); ++i) {
    AgentClosure ac;
    ac.agent = i;
    ac.next_shell_empty = wide[i].levels[m + 1].empty();
    auto cl_m = wide[i].closure_up_to(m);
    auto cl_m1 = wide[i].closure_up_to(m + 1);
    if (m >= 1)
      for (AgentId l : net.neighbors(i)) ac.neighbor_closures_nested &= subset(wide[l].closure_up_to(m - 1), cl_m);
    for (AgentId l : cl_m) {
      auto nl = sorted(net.neighbors(l));
      ac.inner_neighbors_covered &= subset(nl, cl_m1);
      if (ac.next_shell_empty) ac.closed_under_neighbors &= subset(nl, cl_m);
    }
    rep.agents.push_back(ac);
  }
  for (auto& ac : rep.agents) {
    ac.decoupled = ac.next_shell_empty;
    for (AgentId l : net.neighbors(ac.agent)) ac.decoupled = ac.decoupled && rep.agents[l].next_shell_empty;
  }
  return rep;
}

}  // namespace decabs
