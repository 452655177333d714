#include "decabs/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace decabs {

namespace {

struct Neumaier {
  double sum = 0.0, comp = 0.0;
  void add(double x) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double factorial(std::size_t k) {
  double f = 1.0;
  for (std::size_t j = 2; j <= k; ++j) f *= static_cast<double>(j);
  return f;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Positive series for H_kappa (kappa >= 2); all terms nonnegative.
double H_series(std::size_t kappa, double t, double M, double K, double L) {
  double term = std::pow(t, static_cast<double>(kappa)) / factorial(kappa);
  Neumaier s;
  s.add(term);
  for (std::size_t k = 0; k < 10000; ++k) {
    term *= L * t * static_cast<double>(kappa - 1 + k) / (static_cast<double>(k + 1) * static_cast<double>(kappa + k + 1));
    s.add(term);
    if (term <= 1e-18 * s.value()) break;
  }
  return std::pow(K, static_cast<double>(kappa - 1)) * M * s.value();
}

}  // namespace

double horizon_gap(double t, double L1, double L2, std::size_t n_max, double c_bar) {
  const double K = L1 * std::sqrt(static_cast<double>(n_max));
  const double b = L2 + c_bar * L2 * L2 / K;
  return std::expm1(L2 * t) - b * t;
}

RootCertificate horizon_root(double L1, double L2, std::size_t n_max, double c_bar) {
  if (!(L1 >= 0.0) || !(L2 >= 0.0)) throw PlanError("Lipschitz constants must be nonnegative");
  if (!(c_bar > 0.0 && c_bar <= 1.0)) throw PlanError("c_bar must lie in (0, 1]");
  RootCertificate rc;
  if (L1 == 0.0 || L2 == 0.0 || n_max == 0) return rc;  // unbounded horizon
  const double K = L1 * std::sqrt(static_cast<double>(n_max));
  auto g = [&](double t) { return horizon_gap(t, L1, L2, n_max, c_bar); };
  // g is convex, g(0) = 0 and negative at its minimizer.
  double lo = std::log1p(c_bar * L2 / K) / L2;
  double hi = 2.0 * lo;
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  int it = 0;
  while (it < 400) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
    ++it;
  }
  double glo = g(lo), ghi = g(hi);
  rc.value = std::abs(glo) <= std::abs(ghi) ? lo : hi;
  rc.residual = std::abs(glo) <= std::abs(ghi) ? glo : ghi;
  rc.iterations = it;
  return rc;
}

double t_star(double L1, double L2, std::size_t n_max) { return horizon_root(L1, L2, n_max, 1.0).value; }

double t_bar(double L1, double L2, std::size_t n_max, double c_bar) {
  return horizon_root(L1, L2, n_max, c_bar).value;
}

double H_closed_form(std::size_t kappa, double t, double M, double L1, double L2, std::size_t n_max) {
  if (kappa < 1) throw PlanError("H requires kappa >= 1");
  if (!(t >= 0.0)) throw PlanError("H requires t >= 0");
  if (kappa == 1) return M * t;
  const double K = L1 * std::sqrt(static_cast<double>(n_max));
  const double L = L2;
  if (K == 0.0) return 0.0;
  if (L == 0.0) return std::pow(K, static_cast<double>(kappa - 1)) * M * std::pow(t, static_cast<double>(kappa)) / factorial(kappa);
  const double e = std::exp(L * t);
  const double scale = std::pow(K / L, static_cast<double>(kappa - 1)) * M;
  if (kappa == 2) return scale * (std::expm1(L * t) - L * t) / L;
  if (kappa == 3) return scale * (e * (t - 2.0 / L) + t + 2.0 / L);
  Neumaier s;
  const std::size_t m = kappa;
  for (std::size_t j = 0; j + 2 <= m; ++j) {
    const std::size_t p = m - 2 - j;
    double term = static_cast<double>(j + 1) * std::pow(L, static_cast<double>(m) - 3.0 - static_cast<double>(j)) *
                  std::pow(t, static_cast<double>(p)) / factorial(p);
    s.add((j % 2 ? -1.0 : 1.0) * e * term);
  }
  const double sign = (m - 1) % 2 ? -1.0 : 1.0;
  s.add(sign * t);
  s.add(sign * static_cast<double>(m - 1) / L);
  return scale * s.value();
}

double H(std::size_t kappa, double t, double M, double L1, double L2, std::size_t n_max) {
  if (kappa < 1) throw PlanError("H requires kappa >= 1");
  if (!(t >= 0.0)) throw PlanError("H requires t >= 0");
  if (kappa == 1) return M * t;
  const double K = L1 * std::sqrt(static_cast<double>(n_max));
  // The closed forms cancel badly for small L2 t; the positive series does not.
  if (L2 * t < 30.0) return H_series(kappa, t, M, K, L2);
  return H_closed_form(kappa, t, M, L1, L2, n_max);
}

double alpha(double t, double M, double c_bar, std::size_t m) {
  if (!(t >= 0.0)) throw PlanError("alpha requires t >= 0");
  if (m < 1) throw PlanError("alpha requires m >= 1");
  return std::pow(c_bar, static_cast<double>(m - 1)) * M * t;
}

double beta(double t, double d_max, double dt, double lambda_hi, double v_max) {
  if (!(dt > 0.0)) throw PlanError("beta requires dt > 0");
  if (t < -1e-12 * dt || t > dt * (1.0 + 1e-12)) throw PlanError("beta requires 0 <= t <= dt");
  return d_max * (dt - t) / (2.0 * dt) + lambda_hi * v_max * t;
}

double DiscretizationPlan::beta_at(double t) const {
  return d_max * (dt - t) / (2.0 * dt) + lambda_hi * bounds.v_max * t;
}

void validate_plan_inputs(const PlanInputs& in, const SystemBounds& sb) {
  if (in.m < 1) throw PlanError("plan.m must be at least 1");
  if (!(in.lambda_lo >= 0.0)) throw PlanError("plan.lambda_lo must be nonnegative");
  if (!(in.lambda_lo <= in.lambda_hi)) throw PlanError("plan.lambda_lo must not exceed plan.lambda_hi");
  if (in.allow_lambda_hi_one) {
    if (!(in.lambda_hi <= 1.0)) throw PlanError("plan.lambda_hi must not exceed 1");
  } else if (!(in.lambda_hi < 1.0)) {
    throw PlanError("plan.lambda_hi must be below 1 (pass --allow-lambda-hi-one to accept 1)");
  }
  if (!(sb.v_max > 0.0 && sb.v_max < sb.M)) throw PlanError("bounds require 0 < v_max < M");
}

namespace {

DiscretizationPlan plan_common(const SystemBounds& sb, const PlanInputs& in, Theorem th) {
  validate_plan_inputs(in, sb);
  DiscretizationPlan p;
  p.theorem = th;
  p.m = in.m;
  p.lambda_lo = in.lambda_lo;
  p.lambda_hi = in.lambda_hi;
  p.bounds = sb;
  p.K = sb.L1 * std::sqrt(static_cast<double>(sb.n_max));
  const double v = sb.v_max, lo = in.lambda_lo, hi = in.lambda_hi, K = p.K, L2 = sb.L2;

  if (in.c_bar) {
    if (!(*in.c_bar > 0.0 && *in.c_bar < 1.0)) throw PlanError("plan.c_bar must lie in (0, 1)");
    p.c_bar = *in.c_bar;
  }
  if (th == Theorem::one) {
    if (!in.c_bar) throw PlanError("plan.c_bar is required for the coupled-deviation plan");
    p.c = std::pow(p.c_bar, static_cast<double>(in.m - 1));
    if (sb.L1 > 0.0 && sb.L2 == 0.0 && sb.n_max > 0)
      throw PlanError("degenerate constants (L2 = 0 with L1 > 0): the deviation horizon is undefined");
  }
  p.t_star = t_star(sb.L1, sb.L2, sb.n_max);
  if (p.c_bar > 0.0) p.t_bar = t_bar(sb.L1, sb.L2, sb.n_max, p.c_bar);

  const double cM = p.c * sb.M;
  const double drift = K * (cM + hi * v) + lo * L2 * v;
  p.dt_control_branch = drift > 0.0 ? (1.0 - lo) * v / drift : kUnbounded;
  if (th == Theorem::one && p.t_bar < p.dt_control_branch) {
    p.dt_upper = p.t_bar;
    p.dt_binding = "horizon";
  } else {
    p.dt_upper = p.dt_control_branch;
    p.dt_binding = "control";
  }
  if (is_unbounded(p.dt_upper))
    throw PlanError("time step is unconstrained by the bounds; supply a coupled system with positive constants");

  if (in.dt) {
    const double dt = *in.dt;
    if (!(dt > 0.0)) throw PlanError("time step must be positive");
    if (!(dt < p.dt_control_branch))
      throw PlanError("plan.dt violates the time-step bound (control budget branch): dt=" + num(dt) +
                      " must be < " + num(p.dt_control_branch));
    if (th == Theorem::one && !(dt < p.t_bar))
      throw PlanError("plan.dt violates the time-step bound (deviation horizon branch): dt=" + num(dt) +
                      " must be < " + num(p.t_bar));
    p.dt = dt;
  } else {
    p.dt = 0.5 * p.dt_upper;
  }
  const double dt = p.dt;
  p.d_max_initial_branch = 2.0 * (1.0 - lo) * v * dt / (1.0 + (K + L2) * dt);
  p.d_max_final_branch = 2.0 * (1.0 - lo) * v * dt - 2.0 * drift * dt * dt;
  if (p.d_max_initial_branch <= p.d_max_final_branch) {
    p.d_max_upper = p.d_max_initial_branch;
    p.d_max_binding = "initial";
  } else {
    p.d_max_upper = p.d_max_final_branch;
    p.d_max_binding = "final";
  }
  if (!(p.d_max_upper > 0.0)) throw PlanError("grid diameter bound is not positive for this time step");
  if (in.d_max) {
    const double d = *in.d_max;
    if (!(d > 0.0)) throw PlanError("plan.d_max must be positive");
    if (d > p.d_max_initial_branch)
      throw PlanError("plan.d_max violates the grid diameter bound (initial-time branch): d_max=" + num(d) +
                      " must be <= " + num(p.d_max_initial_branch));
    if (d > p.d_max_final_branch)
      throw PlanError("plan.d_max violates the grid diameter bound (final-time branch): d_max=" + num(d) +
                      " must be <= " + num(p.d_max_final_branch));
    p.d_max = d;
  } else {
    p.d_max = p.d_max_upper;
  }
  adopt_grid_diameter(p, p.d_max);
  return p;
}

}  // namespace

void adopt_grid_diameter(DiscretizationPlan& p, double d) {
  if (!(d > 0.0)) throw PlanError("grid diameter must be positive");
  if (d > p.d_max_upper * (1.0 + 1e-12))
    throw PlanError("grid diameter " + num(d) + " exceeds the plan's bound " + num(p.d_max_upper));
  const double v = p.bounds.v_max, lo = p.lambda_lo, hi = p.lambda_hi, K = p.K, L2 = p.bounds.L2, dt = p.dt;
  p.d_max = d;
  p.radius = lo * v * dt;
  p.a_left = (1.0 - lo) * v - K * d / 2.0 - d / (2.0 * dt) - L2 * d / 2.0;
  p.a_right_decoupled = (1.0 - lo) * v - d / (2.0 * dt) - L2 * lo * v * dt - K * hi * v * dt;
  p.a_right_coupled = p.a_right_decoupled - K * p.c * p.bounds.M * dt;
  // Rounding at the binding branch can leave tiny negatives.
  auto snap = [&](double& a) {
    if (a < 0.0 && a > -1e-12 * v) a = 0.0;
  };
  snap(p.a_left);
  snap(p.a_right_decoupled);
  snap(p.a_right_coupled);
}

DiscretizationPlan plan_theorem1(const SystemBounds& sb, const PlanInputs& in) {
  return plan_common(sb, in, Theorem::one);
}

DiscretizationPlan plan_theorem2(const SystemBounds& sb, const PlanInputs& in, const ClosureReport& closure) {
  if (closure.degree != in.m) throw PlanError("closure report was computed for a different m");
  if (!closure.all_closed()) {
    std::string who;
    for (const auto& a : closure.agents)
      if (!a.next_shell_empty) who += (who.empty() ? "" : ", ") + std::to_string(a.agent + 1);
    throw PlanError("the decoupled plan needs every (m+1)-shell empty, which fails for agent(s) " + who +
                    "; use --theorem 1");
  }
  return plan_common(sb, in, Theorem::two);
}

DiscretizationPlan make_plan(const SystemBounds& sb, const PlanInputs& in, const ClosureReport& closure) {
  return in.theorem == Theorem::one ? plan_theorem1(sb, in) : plan_theorem2(sb, in, closure);
}

std::string to_string(ZetaMode z) { return z == ZetaMode::constant ? "constant" : "corollary"; }

ZetaMode zeta_mode_from_string(const std::string& s) {
  if (s == "constant") return ZetaMode::constant;
  if (s == "corollary") return ZetaMode::corollary;
  throw PlanError("unknown zeta profile '" + s + "'");
}

ZetaProfile ZetaProfile::constant(const DiscretizationPlan& plan) {
  ZetaProfile z;
  z.mode_ = ZetaMode::constant;
  z.lo_ = plan.lambda_lo;
  z.hi_ = plan.lambda_hi;
  z.dt_ = plan.dt;
  z.v_ = plan.bounds.v_max;
  z.radius_ = plan.radius;
  return z;
}

ZetaProfile ZetaProfile::corollary(const DiscretizationPlan& plan, const Network& net, const ClosureReport& closure,
                                   AgentId i, bool per_agent_constants) {
  ZetaProfile z = constant(plan);
  z.mode_ = ZetaMode::corollary;
  z.decoupled_ = plan.theorem == Theorem::two || closure.agents.at(i).decoupled;
  z.a_left_ = plan.a_left;
  z.a_right_ = z.decoupled_ ? plan.a_right_decoupled : plan.a_right_coupled;
  if (per_agent_constants) {
    z.per_agent_ = true;
    const auto& b = plan.bounds.agents.at(i);
    const double Ki = b.L1 * std::sqrt(static_cast<double>(net.in_degree(i)));
    const double v = plan.bounds.v_max, lo = plan.lambda_lo, hi = plan.lambda_hi, d = plan.d_max, dt = plan.dt;
    z.a_left_ = (1.0 - lo) * v - Ki * d / 2.0 - d / (2.0 * dt) - b.L2 * d / 2.0;
    z.a_right_ = (1.0 - lo) * v - d / (2.0 * dt) - b.L2 * lo * v * dt - Ki * hi * v * dt;
    if (!z.decoupled_) z.a_right_ -= Ki * plan.c * plan.bounds.M * dt;
  }
  z.a_left_ = std::max(0.0, z.a_left_);
  z.a_right_ = std::max(0.0, z.a_right_);
  z.radius_ = z.v_ * z.integral(z.dt_);
  return z;
}

double ZetaProfile::xi(double t) const {
  if (mode_ == ZetaMode::constant) return 0.0;
  double q = (a_left_ * (dt_ - t) + a_right_ * t) / (dt_ * v_ * (1.0 + t));
  return std::clamp(q, 0.0, hi_ - lo_);
}

double ZetaProfile::value(double t) const { return lo_ + xi(t); }

double ZetaProfile::integral(double t) const {
  if (t <= 0.0) return 0.0;
  if (mode_ == ZetaMode::constant) return lo_ * t;
  return simpson(0.0, t, 2048, [this](double s) { return value(s); });
}

}  // namespace decabs
