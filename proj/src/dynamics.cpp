#include "decabs/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace decabs {

std::string to_string(KernelKind k) {
  switch (k) {
    case KernelKind::zero: return "zero";
    case KernelKind::linear_diffusive: return "linear_diffusive";
    case KernelKind::saturated_sum: return "saturated_sum";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "zero") return KernelKind::zero;
  if (s == "linear_diffusive") return KernelKind::linear_diffusive;
  if (s == "saturated_sum") return KernelKind::saturated_sum;
  throw DynamicsError("unknown kernel '" + s + "'");
}

Point saturate(const Point& x, double rho) {
  double n = x.norm();
  if (n <= rho) return x;
  return (rho / n) * x;
}

Point eval_kernel(const KernelSpec& spec, const Point& xi, std::span<const Point> xj) {
  return kernel_value(spec, xi, xj.size(), [&](std::size_t k) -> const Point& { return xj[k]; });
}

void validate_kernel(const KernelSpec& spec, std::size_t neighbor_count) {
  switch (spec.kind) {
    case KernelKind::zero:
      break;
    case KernelKind::linear_diffusive:
      if (spec.weights.size() != neighbor_count)
        throw DynamicsError("linear_diffusive needs one weight per neighbor");
      for (double a : spec.weights)
        if (!(a >= 0.0) || !std::isfinite(a)) throw DynamicsError("linear_diffusive weights must be finite and nonnegative");
      break;
    case KernelKind::saturated_sum:
      if (!(spec.rho > 0.0) || !std::isfinite(spec.rho)) throw DynamicsError("saturated_sum needs rho > 0");
      break;
  }
}

AgentBounds kernel_bounds(const KernelSpec& spec, std::size_t n) {
  AgentBounds b;
  const double dn = static_cast<double>(n);
  switch (spec.kind) {
    case KernelKind::zero:
      break;
    case KernelKind::linear_diffusive: {
      double s2 = 0.0, s1 = 0.0;
      for (double a : spec.weights) {
        s2 += a * a;
        s1 += a;
      }
      b.L1 = std::sqrt(s2);
      b.L2 = s1;
      b.M = std::numeric_limits<double>::quiet_NaN();  // user supplied
      break;
    }
    case KernelKind::saturated_sum:
      if (n > 0) {
        b.M = dn * spec.rho;
        b.L1 = std::sqrt(dn);
        b.L2 = dn;
      }
      break;
  }
  return b;
}

namespace {

// Largest |f_i| over corners and random points of the workspace.
double sampled_sup(const KernelSpec& spec, std::size_t n, const Decomposition& ws, unsigned seed) {
  const int dim = ws.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto corner = [&](std::size_t bits) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = (bits >> k) & 1 ? ws.upper()[k] : ws.lower()[k];
    return p;
  };
  const std::size_t corners = std::size_t{1} << dim;
  double best = 0.0;
  std::vector<Point> xs(n);
  for (int trial = 0; trial < 4096; ++trial) {
    Point xi(dim);
    // Extreme placements first: own state and neighbors in opposite corners.
    if (trial < 64) {
      xi = corner(static_cast<std::size_t>(trial) % corners);
      for (auto& x : xs) x = corner(corners - 1 - static_cast<std::size_t>(trial) % corners);
    } else {
      for (int k = 0; k < dim; ++k) xi[k] = ws.lower()[k] + u(rng) * (ws.upper()[k] - ws.lower()[k]);
      for (auto& x : xs) {
        x.resize(dim);
        for (int k = 0; k < dim; ++k) x[k] = ws.lower()[k] + u(rng) * (ws.upper()[k] - ws.lower()[k]);
      }
    }
    best = std::max(best, eval_kernel(spec, xi, xs).norm());
  }
  return best;
}

}  // namespace

SystemBounds derive_bounds(const Network& net, const std::vector<KernelSpec>& kernels, double v_max,
                           std::optional<double> M_override, const Decomposition* workspace, unsigned sample_seed) {
  if (kernels.size() != net.size()) throw DynamicsError("one kernel per agent is required");
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw DynamicsError("v_max must be positive");
  if (M_override && (!(*M_override > 0.0) || !std::isfinite(*M_override)))
    throw DynamicsError("M_override must be positive");
  SystemBounds sb;
  sb.v_max = v_max;
  sb.n_max = net.max_in_degree();
  double derived_M = 0.0;
  for (AgentId i = 0; i < net.size(); ++i) {
    const std::size_t n = net.in_degree(i);
    validate_kernel(kernels[i], n);
    AgentBounds b = kernel_bounds(kernels[i], n);
    if (std::isnan(b.M)) {
      if (!M_override)
        throw DynamicsError("agent " + std::to_string(i + 1) + ": linear_diffusive kernel requires bounds.M_override");
      if (workspace) {
        double sup = sampled_sup(kernels[i], n, *workspace, sample_seed + static_cast<unsigned>(i));
        if (sup > *M_override)
          throw DynamicsError("agent " + std::to_string(i + 1) + ": M_override is below the kernel magnitude on the workspace");
      }
      b.M = *M_override;
    }
    derived_M = std::max(derived_M, b.M);
    sb.L1 = std::max(sb.L1, b.L1);
    sb.L2 = std::max(sb.L2, b.L2);
    sb.agents.push_back(b);
  }
  if (M_override) {
    if (*M_override < derived_M) throw DynamicsError("M_override is smaller than a certified kernel bound");
    sb.M = *M_override;
    sb.M_overridden = true;
  } else {
    sb.M = derived_M;
  }
  if (!(v_max < sb.M))
    throw DynamicsError("v_max must be strictly smaller than the interconnection bound M (got v_max=" +
                        std::to_string(v_max) + ", M=" + std::to_string(sb.M) + ")");
  return sb;
}

}  // namespace decabs
