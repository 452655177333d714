#include "decabs/reftraj.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decabs {

std::size_t ReferenceBundle::slot(AgentId a) const {
  auto it = std::find(members_.begin(), members_.end(), a);
  if (it == members_.end()) throw std::out_of_range("agent " + std::to_string(a + 1) + " is not in this bundle");
  return static_cast<std::size_t>(it - members_.begin());
}

bool ReferenceBundle::has_member(AgentId a) const {
  return std::find(members_.begin(), members_.end(), a) != members_.end();
}

bool ReferenceBundle::frozen(AgentId a) const { return frozen_[slot(a)] != 0; }

const Point& ReferenceBundle::sample(AgentId a, std::size_t k) const { return samples_[slot(a)].at(k); }

Point ReferenceBundle::at(AgentId a, double t) const {
  const std::size_t s = slot(a);
  const auto& x = samples_[s];
  if (frozen_[s]) return x[0];
  if (t <= 0.0) return x[0];
  if (t >= horizon_) return x[steps_];
  double q = t / step_;
  std::size_t k = std::min(steps_ - 1, static_cast<std::size_t>(q));
  double u = q - static_cast<double>(k);
  const auto& dx = slopes_[s];
  double u2 = u * u, u3 = u2 * u;
  double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * x[k] + (h10 * step_) * dx[k] + h01 * x[k + 1] + (h11 * step_) * dx[k + 1];
}

ReferenceBundle solve_reference_ivp(const Network& net, const Decomposition& grid, const std::vector<KernelSpec>& kernels,
                                    const MCellConfig& cfg, double horizon, std::size_t divisor) {
  if (cfg.degree < 1) throw std::invalid_argument("reference trajectories need m >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("reference horizon must be positive");
  if (divisor == 0) throw std::invalid_argument("ODE step divisor must be positive");
  const auto levels = net.level_sets(cfg.agent, cfg.degree + 1);
  const auto order = net.ordering(cfg.agent, cfg.degree);
  if (cfg.cells.size() != order.size()) throw std::invalid_argument("configuration length does not match the m-neighborhood");
  for (CellIndex c : cfg.cells)
    if (c >= grid.cell_count()) throw std::invalid_argument("configuration names an unknown cell");

  ReferenceBundle b;
  b.agent_ = cfg.agent;
  b.degree_ = cfg.degree;
  b.case_ = levels.levels[cfg.degree + 1].empty() ? ReferenceCase::closed : ReferenceCase::frozen;
  b.horizon_ = horizon;
  b.steps_ = divisor;
  b.step_ = horizon / static_cast<double>(divisor);
  b.members_ = order.sequence;
  const std::size_t n = order.size();
  b.frozen_.assign(n, 0);
  if (b.case_ == ReferenceCase::frozen)
    for (std::size_t p = 0; p < n; ++p)
      if (order.level_of_position(p) == cfg.degree) b.frozen_[p] = 1;

  // Neighbor slots of every integrated member.
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (b.frozen_[p]) continue;
    for (AgentId l : net.neighbors(order.sequence[p])) {
      auto q = order.position_of(l);
      if (!q) throw std::logic_error("neighbor outside the m-neighborhood");
      nb[p].push_back(*q);
    }
  }

  std::vector<Point> x(n);
  for (std::size_t p = 0; p < n; ++p) x[p] = grid.reference_point(cfg.cells[p]);
  const int dim = grid.dim();
  auto rhs = [&](const std::vector<Point>& s, std::vector<Point>& out) {
    for (std::size_t p = 0; p < n; ++p) {
      if (b.frozen_[p]) {
        out[p] = Point::Zero(dim);
        continue;
      }
      const auto& idx = nb[p];
      out[p] = kernel_value(kernels[order.sequence[p]], s[p], idx.size(),
                            [&](std::size_t k) -> const Point& { return s[idx[k]]; });
    }
  };

  b.samples_.assign(n, {});
  b.slopes_.assign(n, {});
  std::vector<Point> k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto record = [&] {
    rhs(x, k1);
    for (std::size_t p = 0; p < n; ++p) {
      b.samples_[p].push_back(x[p]);
      b.slopes_[p].push_back(k1[p]);
    }
  };
  const double h = b.step_;
  record();
  for (std::size_t s = 0; s < divisor; ++s) {
    // k1 already holds rhs(x) from record().
    for (std::size_t p = 0; p < n; ++p) tmp[p] = x[p] + 0.5 * h * k1[p];
    rhs(tmp, k2);
    for (std::size_t p = 0; p < n; ++p) tmp[p] = x[p] + 0.5 * h * k2[p];
    rhs(tmp, k3);
    for (std::size_t p = 0; p < n; ++p) tmp[p] = x[p] + h * k3[p];
    rhs(tmp, k4);
    for (std::size_t p = 0; p < n; ++p) x[p] += (h / 6.0) * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
    record();
  }
  return b;
}

ReferenceBundle solve_reference_ivp_h(const Network& net, const Decomposition& grid,
                                      const std::vector<KernelSpec>& kernels, const MCellConfig& cfg, double horizon,
                                      double h) {
  if (!(h > 0.0)) throw std::invalid_argument("ODE step must be positive");
  double q = horizon / h;
  double r = std::round(q);
  if (r < 1.0 || std::abs(q - r) > 1e-9 * std::max(1.0, q)) throw std::invalid_argument("ODE step must divide the horizon");
  return solve_reference_ivp(net, grid, kernels, cfg, horizon, static_cast<std::size_t>(r));
}

}  // namespace decabs
