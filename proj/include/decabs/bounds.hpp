#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "decabs/dynamics.hpp"
#include "decabs/network.hpp"

namespace decabs {

struct PlanError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();
inline bool is_unbounded(double t) { return t == kUnbounded; }

struct RootCertificate {
  double value = kUnbounded;
  double residual = 0.0;  // g(value)
  int iterations = 0;
};

// Positive root of exp(L2 t) - (L2 + c L2^2 / (L1 sqrt(N))) t - 1.
double horizon_gap(double t, double L1, double L2, std::size_t n_max, double c_bar);
RootCertificate horizon_root(double L1, double L2, std::size_t n_max, double c_bar);
double t_star(double L1, double L2, std::size_t n_max);
double t_bar(double L1, double L2, std::size_t n_max, double c_bar);

// Neighbor estimate deviation bound H_kappa(t).
double H(std::size_t kappa, double t, double M, double L1, double L2, std::size_t n_max);
double H_closed_form(std::size_t kappa, double t, double M, double L1, double L2, std::size_t n_max);

double alpha(double t, double M, double c_bar, std::size_t m);
double beta(double t, double d_max, double dt, double lambda_hi, double v_max);

enum class Theorem { one = 1, two = 2 };

struct PlanInputs {
  Theorem theorem = Theorem::two;
  std::size_t m = 1;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  std::optional<double> c_bar;  // required for Theorem::one
  std::optional<double> dt;
  std::optional<double> d_max;
  bool allow_lambda_hi_one = false;
};

struct DiscretizationPlan {
  Theorem theorem = Theorem::two;
  std::size_t m = 1;
  double lambda_lo = 0.0, lambda_hi = 0.0;
  double c_bar = 0.0;     // 0 when unused
  double c = 0.0;         // c_bar^(m-1), 0 under Theorem::two
  SystemBounds bounds;
  double K = 0.0;         // L1 sqrt(N_max)

  double t_star = kUnbounded;
  double t_bar = kUnbounded;

  double dt_control_branch = 0.0;  // (1-lo) v / (K (cM + hi v) + lo L2 v)
  double dt_upper = 0.0;           // open bound
  std::string dt_binding;          // "horizon" or "control"
  double dt = 0.0;

  double d_max_initial_branch = 0.0;
  double d_max_final_branch = 0.0;
  double d_max_upper = 0.0;        // closed bound
  std::string d_max_binding;       // "initial" or "final"
  double d_max = 0.0;

  double radius = 0.0;             // lo v dt
  double a_left = 0.0;
  double a_right_coupled = 0.0;
  double a_right_decoupled = 0.0;

  double alpha_at(double t) const { return c * bounds.M * t; }
  double beta_at(double t) const;
};

void validate_plan_inputs(const PlanInputs& in, const SystemBounds& sb);
DiscretizationPlan plan_theorem1(const SystemBounds& sb, const PlanInputs& in);
DiscretizationPlan plan_theorem2(const SystemBounds& sb, const PlanInputs& in, const ClosureReport& closure);
DiscretizationPlan make_plan(const SystemBounds& sb, const PlanInputs& in, const ClosureReport& closure);

// Replaces d_max by a realized grid diameter, which must satisfy the plan's bound.
void adopt_grid_diameter(DiscretizationPlan& plan, double diameter);

enum class ZetaMode { constant, corollary };
std::string to_string(ZetaMode z);
ZetaMode zeta_mode_from_string(const std::string& s);

// Planning fraction zeta(t) in [lo, hi] over [0, dt].
class ZetaProfile {
 public:
  static ZetaProfile constant(const DiscretizationPlan& plan);
  // per_agent_constants swaps system constants for agent i's own kernel constants.
  static ZetaProfile corollary(const DiscretizationPlan& plan, const Network& net, const ClosureReport& closure,
                               AgentId i, bool per_agent_constants = false);

  ZetaMode mode() const { return mode_; }
  double value(double t) const;
  double xi(double t) const;
  double integral(double t) const;  // int_0^t zeta
  double radius() const { return radius_; }
  double a_left() const { return a_left_; }
  double a_right() const { return a_right_; }
  bool decoupled() const { return decoupled_; }
  bool per_agent() const { return per_agent_; }

 private:
  ZetaMode mode_ = ZetaMode::constant;
  double lo_ = 0.0, hi_ = 0.0, dt_ = 0.0, v_ = 0.0;
  double a_left_ = 0.0, a_right_ = 0.0;
  bool decoupled_ = false, per_agent_ = false;
  double radius_ = 0.0;
};

double simpson(double a, double b, std::size_t intervals, const auto& f) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < intervals; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(k));
  return s * h / 3.0;
}

}  // namespace decabs
