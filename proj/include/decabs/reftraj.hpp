#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "decabs/decomposition.hpp"
#include "decabs/dynamics.hpp"
#include "decabs/network.hpp"
#include "decabs/vec.hpp"

namespace decabs {

enum class ReferenceCase {
  closed,  // next shell empty: integrate the whole m-neighborhood
  frozen   // outermost level held at its reference points
};

// Reference trajectories of an agent and its m-neighbors on [0, horizon], sampled on a
// uniform grid and interpolated by cubic Hermite splines between samples.
class ReferenceBundle {
 public:
  AgentId agent() const { return agent_; }
  std::size_t degree() const { return degree_; }
  ReferenceCase reference_case() const { return case_; }
  double horizon() const { return horizon_; }
  double step() const { return step_; }
  std::size_t steps() const { return steps_; }
  const std::vector<AgentId>& members() const { return members_; }
  bool has_member(AgentId a) const;
  bool frozen(AgentId a) const;

  Point at(AgentId a, double t) const;
  const Point& sample(AgentId a, std::size_t k) const;
  const Point& endpoint(AgentId a) const { return sample(a, steps_); }

 private:
  friend ReferenceBundle solve_reference_ivp(const Network&, const Decomposition&, const std::vector<KernelSpec>&,
                                             const MCellConfig&, double, std::size_t);
  std::size_t slot(AgentId a) const;

  AgentId agent_ = 0;
  std::size_t degree_ = 0;
  ReferenceCase case_ = ReferenceCase::closed;
  double horizon_ = 0.0, step_ = 0.0;
  std::size_t steps_ = 0;
  std::vector<AgentId> members_;
  std::vector<char> frozen_;
  std::vector<std::vector<Point>> samples_, slopes_;
};

// RK4 with `divisor` substeps over [0, horizon]; configuration cells give the initial states.
ReferenceBundle solve_reference_ivp(const Network& net, const Decomposition& grid, const std::vector<KernelSpec>& kernels,
                                    const MCellConfig& cfg, double horizon, std::size_t divisor = 64);

// Step-size form: h must divide horizon.
ReferenceBundle solve_reference_ivp_h(const Network& net, const Decomposition& grid,
                                      const std::vector<KernelSpec>& kernels, const MCellConfig& cfg, double horizon,
                                      double h);

}  // namespace decabs
