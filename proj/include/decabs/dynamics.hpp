#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "decabs/decomposition.hpp"
#include "decabs/network.hpp"
#include "decabs/vec.hpp"

namespace decabs {

struct DynamicsError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class KernelKind { zero, linear_diffusive, saturated_sum };

std::string to_string(KernelKind k);
KernelKind kernel_kind_from_string(const std::string& s);

struct KernelSpec {
  KernelKind kind = KernelKind::zero;
  std::vector<double> weights;  // linear_diffusive, aligned with the neighbor tuple
  double rho = 0.0;             // saturated_sum
};

// sat(x) = x inside the rho-ball, rho * x/|x| outside.
Point saturate(const Point& x, double rho);

// f_i(x_i, x_j) with the neighbors supplied by index through `neighbor(k)`.
template <class Get>
Point kernel_value(const KernelSpec& spec, const Point& xi, std::size_t count, Get&& neighbor) {
  Point out = Point::Zero(xi.size());
  switch (spec.kind) {
    case KernelKind::zero:
      break;
    case KernelKind::linear_diffusive:
      for (std::size_t k = 0; k < count; ++k) out += spec.weights[k] * (neighbor(k) - xi);
      break;
    case KernelKind::saturated_sum:
      for (std::size_t k = 0; k < count; ++k) out += saturate(neighbor(k) - xi, spec.rho);
      break;
  }
  return out;
}

Point eval_kernel(const KernelSpec& spec, const Point& xi, std::span<const Point> xj);

struct AgentBounds {
  double M = 0.0, L1 = 0.0, L2 = 0.0;
};

struct SystemBounds {
  double M = 0.0, L1 = 0.0, L2 = 0.0;
  double v_max = 0.0;
  std::size_t n_max = 0;
  bool M_overridden = false;
  std::vector<AgentBounds> agents;
};

void validate_kernel(const KernelSpec& spec, std::size_t neighbor_count);
AgentBounds kernel_bounds(const KernelSpec& spec, std::size_t neighbor_count);

// Validates kernels against the network and returns system constants.
// Linear diffusive kernels need a user M, which is checked by sampling the workspace.
SystemBounds derive_bounds(const Network& net, const std::vector<KernelSpec>& kernels, double v_max,
                           std::optional<double> M_override, const Decomposition* workspace = nullptr,
                           unsigned sample_seed = 1);

}  // namespace decabs
