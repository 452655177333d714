#include "decabs/control.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "decabs/parallel.hpp"

namespace decabs {

namespace {

std::string fmt_point(const Point& p) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (int k = 0; k < p.size(); ++k) os << (k ? ", " : "") << p[k];
  os << ")";
  return os.str();
}

// Reference data on the half-step grid t_q = q h / 2, q = 0..2*steps.
struct Precomp {
  double dt = 0.0, h = 0.0;
  std::size_t steps = 0;
  std::vector<double> t;
  std::vector<Point> chi;
  std::vector<std::vector<Point>> chi_nb;
  std::vector<Point> f_ref;
  std::vector<double> zeta;
  std::vector<double> zeta_int;  // at even q only (samples)
};

Precomp precompute(const ReferenceBundle& b, AgentId agent, const KernelSpec& kernel,
                   const std::vector<AgentId>& neighbors, const ZetaProfile& zeta, double dt, std::size_t steps,
                   bool with_integral) {
  Precomp pc;
  pc.dt = dt;
  pc.steps = steps;
  pc.h = dt / static_cast<double>(steps);
  const std::size_t Q = 2 * steps + 1;
  pc.chi_nb.assign(neighbors.size(), {});
  for (std::size_t q = 0; q < Q; ++q) {
    double t = q + 1 == Q ? dt : 0.5 * pc.h * static_cast<double>(q);
    pc.t.push_back(t);
    pc.chi.push_back(b.at(agent, t));
    for (std::size_t s = 0; s < neighbors.size(); ++s) pc.chi_nb[s].push_back(b.at(neighbors[s], t));
    pc.f_ref.push_back(kernel_value(kernel, pc.chi.back(), neighbors.size(),
                                    [&](std::size_t s) -> const Point& { return pc.chi_nb[s].back(); }));
    pc.zeta.push_back(zeta.value(t));
  }
  if (with_integral) {
    for (std::size_t k = 0; k <= steps; ++k) pc.zeta_int.push_back(zeta.integral(pc.t[2 * k]));
  }
  return pc;
}

struct RunResult {
  std::vector<Point> x, k;
  double max_control = 0.0;
};

// RK4 over the half-step grid; dist(s, q) returns neighbor slot s at grid index q.
template <class Dist>
RunResult integrate(const Precomp& pc, const KernelSpec& kernel, std::size_t n_nb, const Point& x0, const Point& k2,
                    const Point& w, Dist&& dist, bool keep_path) {
  RunResult r;
  const int dim = static_cast<int>(x0.size());
  Point dbuf[16];
  std::vector<Point> dvec;
  Point* d = dbuf;
  if (n_nb > 16) {
    dvec.resize(n_nb);
    d = dvec.data();
  }
  auto eval = [&](std::size_t q, const Point& x, Point& ctrl) -> Point {
    for (std::size_t s = 0; s < n_nb; ++s) d[s] = dist(s, q);
    Point fx = kernel_value(kernel, x, n_nb, [&](std::size_t s) -> const Point& { return d[s]; });
    ctrl = pc.f_ref[q] - fx + k2 + pc.zeta[q] * w;
    double m = ctrl.norm();
    if (m > r.max_control) r.max_control = m;
    return fx + ctrl;
  };
  Point x = x0, c(dim), a1, a2, a3, a4;
  const double h = pc.h;
  a1 = eval(0, x, c);
  if (keep_path) {
    r.x.reserve(pc.steps + 1);
    r.k.reserve(pc.steps + 1);
  }
  r.x.push_back(x);
  r.k.push_back(c);
  for (std::size_t s = 0; s < pc.steps; ++s) {
    const std::size_t q = 2 * s;
    a2 = eval(q + 1, x + 0.5 * h * a1, c);
    a3 = eval(q + 1, x + 0.5 * h * a2, c);
    a4 = eval(q + 2, x + h * a3, c);
    x += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    a1 = eval(q + 2, x, c);
    if (keep_path || s + 1 == pc.steps) {
      r.x.push_back(x);
      r.k.push_back(c);
    }
  }
  return r;
}

}  // namespace

FeedbackLaw make_feedback_law(const Network& net, const Decomposition& grid, const std::vector<KernelSpec>& kernels,
                              std::shared_ptr<const ReferenceBundle> bundle, Point x0, Point w, ZetaProfile zeta) {
  FeedbackLaw law;
  law.agent = bundle->agent();
  law.config.agent = bundle->agent();
  law.config.degree = bundle->degree();
  for (AgentId a : bundle->members()) law.config.cells.push_back(grid.locate(bundle->sample(a, 0)));
  law.kernel = kernels.at(law.agent);
  auto nb = net.neighbors(law.agent);
  law.neighbors.assign(nb.begin(), nb.end());
  law.reference_point = bundle->sample(law.agent, 0);
  law.x0 = std::move(x0);
  law.w = std::move(w);
  law.zeta = zeta;
  law.dt = bundle->horizon();
  law.bundle = std::move(bundle);
  if (law.x0.size() != grid.dim() || law.w.size() != grid.dim()) throw ControlError("feedback law dimension mismatch");
  return law;
}

FeedbackTerms feedback_terms(const FeedbackLaw& law, double t, const Point& xi, std::span<const Point> xj) {
  if (t < -1e-12 * law.dt || t > law.dt * (1.0 + 1e-12)) throw ControlError("feedback evaluated outside [0, dt]");
  if (xj.size() != law.neighbors.size()) throw ControlError("neighbor block has the wrong size");
  const auto& b = *law.bundle;
  Point chi = b.at(law.agent, t);
  std::vector<Point> chj;
  chj.reserve(law.neighbors.size());
  for (AgentId l : law.neighbors) chj.push_back(b.at(l, t));
  FeedbackTerms ft;
  ft.coupling = eval_kernel(law.kernel, chi, chj) - eval_kernel(law.kernel, xi, xj);
  ft.initial = (law.reference_point - law.x0) / law.dt;
  ft.planning = law.zeta.value(t) * law.w;
  return ft;
}

Point feedback(const FeedbackLaw& law, double t, const Point& xi, std::span<const Point> xj) {
  return feedback_terms(law, t, xi, xj).total();
}

Point w_for_target(const ReferenceBundle& bundle, const ZetaProfile& zeta, double v_max, const Point& target) {
  const double dt = bundle.horizon();
  const Point& end = bundle.endpoint(bundle.agent());
  const Point gap = target - end;
  const double r = zeta.radius();
  const double tol = 1e-12 * std::max(1.0, r);
  if (gap.norm() > r + tol)
    throw ControlError("target " + fmt_point(target) + " lies outside the planning ball (distance " +
                       std::to_string(gap.norm()) + " > radius " + std::to_string(r) + ")");
  const double I = zeta.integral(dt);
  if (I <= 0.0) return Point::Zero(target.size());
  Point w = gap / I;
  // Radius-limited targets give |w| <= v_max up to quadrature rounding.
  double n = w.norm();
  if (n > v_max) w *= v_max / n;
  return w;
}

Point analytic_state(const FeedbackLaw& law, double t) {
  const auto& b = *law.bundle;
  return b.at(law.agent, t) + ((law.dt - t) / law.dt) * (law.x0 - law.reference_point) + law.zeta.integral(t) * law.w;
}

DisturbedRun simulate_disturbed(const FeedbackLaw& law, const Disturbance& d, std::size_t steps) {
  if (steps == 0) throw ControlError("step count must be positive");
  Precomp pc = precompute(*law.bundle, law.agent, law.kernel, law.neighbors, law.zeta, law.dt, steps, true);
  const Point k2 = (law.reference_point - law.x0) / law.dt;
  auto run = integrate(pc, law.kernel, law.neighbors.size(), law.x0, k2, law.w,
                       [&](std::size_t s, std::size_t q) { return d(s, pc.t[q]); }, true);
  DisturbedRun out;
  out.trajectory.agents = {law.agent};
  for (std::size_t k = 0; k <= steps; ++k) out.trajectory.times.push_back(pc.t[2 * k]);
  out.trajectory.states = {run.x};
  out.trajectory.controls = {run.k};
  out.max_control = run.max_control;
  for (std::size_t k = 0; k <= steps; ++k) {
    Point a = pc.chi[2 * k] + ((law.dt - pc.t[2 * k]) / law.dt) * (law.x0 - law.reference_point) + pc.zeta_int[k] * law.w;
    out.max_gap = std::max(out.max_gap, (a - run.x[k]).cwiseAbs().maxCoeff());
    out.analytic.push_back(std::move(a));
  }
  return out;
}

TubeSpec tube_for_agent(const DiscretizationPlan& plan, const ClosureReport& closure, AgentId i, ZetaMode mode) {
  TubeSpec ts;
  ts.d_max = plan.d_max;
  ts.dt = plan.dt;
  ts.lambda_hi = plan.lambda_hi;
  ts.v_max = plan.bounds.v_max;
  bool zero_dev = plan.theorem == Theorem::two || (mode == ZetaMode::corollary && closure.agents.at(i).decoupled);
  ts.alpha_slope = zero_dev ? 0.0 : plan.c * plan.bounds.M;
  return ts;
}

ConsistencyProblem make_consistency_problem(const Network& net, const Decomposition& grid,
                                            const std::vector<KernelSpec>& kernels,
                                            std::shared_ptr<const ReferenceBundle> bundle, const ZetaProfile& zeta,
                                            const TubeSpec& tube, const Point& target) {
  ConsistencyProblem p;
  const AgentId i = bundle->agent();
  p.kernel = kernels.at(i);
  auto nb = net.neighbors(i);
  p.neighbors.assign(nb.begin(), nb.end());
  CellIndex cell = grid.locate(bundle->sample(i, 0));
  p.cell_lower = grid.box_lower(cell);
  p.cell_upper = grid.box_upper(cell);
  p.zeta = zeta;
  p.target = target;
  p.target_cell = grid.locate(target);
  p.target_lower = grid.box_lower(p.target_cell);
  p.target_upper = grid.box_upper(p.target_cell);
  p.tube = tube;
  p.bundle = std::move(bundle);
  return p;
}

namespace {

struct Shape {
  bool rotating = false;
  double scale = 1.0, omega = 0.0, phase = 0.0;
  std::vector<Point> a, b;  // per slot
};

Point unit_or_axis(const Point& v) {
  double n = v.norm();
  if (n > 0.0) return v / n;
  Point e = Point::Zero(v.size());
  e[0] = 1.0;
  return e;
}

Point random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Point p(dim);
  for (;;) {
    for (int k = 0; k < dim; ++k) p[k] = g(rng);
    double n = p.norm();
    if (n > 1e-12) return p / n;
  }
}

std::vector<Shape> disturbance_shapes(int dim, std::size_t slots, const Point& dir, std::size_t trials, double dt,
                                      std::mt19937_64& rng) {
  std::vector<Shape> out;
  auto constant = [&](const Point& u, double scale = 1.0) {
    Shape s;
    s.scale = scale;
    s.a.assign(slots, u);
    out.push_back(std::move(s));
  };
  constant(-dir);
  constant(dir);
  for (int k = 0; k < dim; ++k) {
    Point e = Point::Zero(dim);
    e[k] = 1.0;
    constant(e);
    constant(-e);
  }
  if (dim > 1 && dim <= 4) {
    for (std::size_t bits = 0; bits < (std::size_t{1} << dim); ++bits) {
      Point e(dim);
      for (int k = 0; k < dim; ++k) e[k] = (bits >> k) & 1 ? -1.0 : 1.0;
      constant(e / std::sqrt(static_cast<double>(dim)));
    }
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t extra = 0;
  while (out.size() < trials) {
    Shape s;
    switch (extra++ % 3) {
      case 0: {  // rotating on the tube boundary
        s.rotating = true;
        s.omega = u01(rng) * 4.0 * std::numbers::pi / dt;
        s.phase = u01(rng) * 2.0 * std::numbers::pi;
        for (std::size_t q = 0; q < slots; ++q) {
          Point a = random_unit(dim, rng);
          Point b = Point::Zero(dim);
          if (dim > 1) {
            b = random_unit(dim, rng);
            b -= b.dot(a) * a;
            b = unit_or_axis(b);
          }
          s.a.push_back(a);
          s.b.push_back(b);
        }
        break;
      }
      case 1:  // independent constant directions on the boundary
        for (std::size_t q = 0; q < slots; ++q) s.a.push_back(random_unit(dim, rng));
        break;
      default:  // interior
        s.scale = u01(rng);
        for (std::size_t q = 0; q < slots; ++q) s.a.push_back(random_unit(dim, rng));
        break;
    }
    out.push_back(std::move(s));
  }
  out.resize(std::max<std::size_t>(trials, 1));
  return out;
}

std::vector<Point> initial_states(const ConsistencyProblem& p, const Point& dir, const ConsistencyOptions& o,
                                  std::mt19937_64& rng) {
  const int dim = static_cast<int>(p.cell_lower.size());
  const Point side = p.cell_upper - p.cell_lower;
  const double pull = 1e-9;
  std::vector<Point> out;
  if (o.ic_grid_per_axis > 0) {
    const std::size_t k = o.ic_grid_per_axis;
    std::vector<std::size_t> c(dim, 0);
    for (;;) {
      Point x(dim);
      for (int a = 0; a < dim; ++a) {
        double f = k == 1 ? 0.5 : static_cast<double>(c[a]) / static_cast<double>(k - 1);
        f = pull + (1.0 - 2.0 * pull) * f;
        x[a] = p.cell_lower[a] + f * side[a];
      }
      out.push_back(x);
      int a = 0;
      while (a < dim && c[a] + 1 == k) c[a++] = 0;
      if (a == dim) break;
      ++c[a];
    }
    return out;
  }
  auto corner = [&](std::size_t bits) {
    Point x(dim);
    for (int a = 0; a < dim; ++a) x[a] = (bits >> a) & 1 ? p.cell_upper[a] - pull * side[a] : p.cell_lower[a] + pull * side[a];
    return x;
  };
  // Corner opposite to the planning direction makes the initial term add to it.
  std::size_t aligned = 0;
  for (int a = 0; a < dim; ++a)
    if (dir[a] < 0.0) aligned |= std::size_t{1} << a;
  out.push_back(corner(aligned));
  out.push_back(corner(aligned));
  if (dim <= 6)
    for (std::size_t bits = 0; bits < (std::size_t{1} << dim); ++bits)
      if (bits != aligned) out.push_back(corner(bits));
  out.push_back(0.5 * (p.cell_lower + p.cell_upper));
  std::uniform_real_distribution<double> u(pull, 1.0 - pull);
  while (out.size() < o.initial_conditions) {
    Point x(dim);
    for (int a = 0; a < dim; ++a) x[a] = p.cell_lower[a] + u(rng) * side[a];
    out.push_back(x);
  }
  if (out.size() > std::max<std::size_t>(o.initial_conditions, 2)) out.resize(std::max<std::size_t>(o.initial_conditions, 2));
  return out;
}

}  // namespace

ConsistencyReport check_consistency(const ConsistencyProblem& p, const ConsistencyOptions& o) {
  if (o.steps == 0) throw ControlError("step count must be positive");
  const auto& b = *p.bundle;
  const AgentId i = b.agent();
  const double dt = b.horizon();
  const double v = p.tube.v_max;
  Precomp pc = precompute(b, i, p.kernel, p.neighbors, p.zeta, dt, o.steps, false);
  const Point w = w_for_target(b, p.zeta, v, p.target);
  const Point xg = b.sample(i, 0);
  const int dim = static_cast<int>(xg.size());
  std::mt19937_64 rng(o.seed);
  const Point dir = unit_or_axis(w.norm() > 0.0 ? w : Point(p.target - b.endpoint(i)));
  auto shapes = disturbance_shapes(dim, p.neighbors.size(), dir, o.disturbance_trials, dt, rng);
  auto ics = initial_states(p, dir, o, rng);

  std::vector<double> radius(pc.t.size()), beta(pc.t.size());
  for (std::size_t q = 0; q < pc.t.size(); ++q) {
    beta[q] = p.tube.beta(pc.t[q]);
    radius[q] = p.tube.alpha(pc.t[q]) + beta[q];
  }

  std::vector<std::pair<std::size_t, std::size_t>> runs;
  if (o.cross) {
    for (std::size_t a = 0; a < ics.size(); ++a)
      for (std::size_t s = 0; s < shapes.size(); ++s) runs.emplace_back(a, s);
  } else {
    std::size_t n = std::max(ics.size(), shapes.size());
    for (std::size_t r = 0; r < n; ++r) runs.emplace_back(r % ics.size(), r % shapes.size());
  }

  ConsistencyReport rep;
  rep.runs = runs.size();
  const double tcell = 1e-9 * std::max(1.0, (p.target_upper - p.target_lower).norm());
  for (int a = 0; a < dim; ++a)
    if (p.target[a] < p.target_lower[a] - tcell || p.target[a] > p.target_upper[a] + tcell) rep.target_in_cell = false;
  std::mutex mtx;

  auto one = [&](std::size_t r) {
    const auto& x0 = ics[runs[r].first];
    const Shape& sh = shapes[runs[r].second];
    const Point k2 = (xg - x0) / dt;
    auto dist = [&](std::size_t s, std::size_t q) -> Point {
      Point u;
      if (sh.rotating) {
        double ang = sh.omega * pc.t[q] + sh.phase;
        u = std::cos(ang) * sh.a[s] + std::sin(ang) * sh.b[s];
      } else {
        u = sh.a[s];
      }
      return pc.chi_nb[s][q] + (sh.scale * radius[q]) * u;
    };
    auto res = integrate(pc, p.kernel, p.neighbors.size(), x0, k2, w, dist, true);
    double tube = kUnbounded;
    std::size_t tube_k = 0;
    for (std::size_t k = 0; k <= o.steps; ++k) {
      double m = beta[2 * k] - (res.x[k] - pc.chi[2 * k]).norm();
      if (m < tube) {
        tube = m;
        tube_k = k;
      }
    }
    double arrival = (res.x.back() - p.target).norm();
    std::lock_guard<std::mutex> lock(mtx);
    rep.worst_tube_margin = std::min(rep.worst_tube_margin, tube);
    rep.worst_arrival_error = std::max(rep.worst_arrival_error, arrival);
    rep.max_control = std::max(rep.max_control, res.max_control);
    auto note = [&](const std::string& s) {
      if (rep.failures.size() < 8) rep.failures.push_back(s);
    };
    if (!(tube > 0.0))
      note("tube containment |x - chi| < beta violated at t=" + std::to_string(pc.t[2 * tube_k]) + " from x0=" +
           fmt_point(x0) + " (margin " + std::to_string(tube) + ")");
    if (!(arrival <= 1e-6)) note("arrival at the commanded point missed by " + std::to_string(arrival) + " from x0=" + fmt_point(x0));
    if (!(res.max_control <= v + 1e-9))
      note("control bound |k| <= v_max violated: |k|=" + std::to_string(res.max_control) + " from x0=" + fmt_point(x0));
  };
  if (o.parallel)
    parallel_for(runs.size(), one);
  else
    for (std::size_t r = 0; r < runs.size(); ++r) one(r);

  rep.worst_control_margin = v - rep.max_control;
  if (!rep.target_in_cell) rep.failures.insert(rep.failures.begin(), "commanded point lies outside the target cell");
  rep.passed = rep.failures.empty();
  return rep;
}

NetworkRun simulate_network(const Network& net, const std::vector<KernelSpec>& kernels,
                            const std::vector<AgentDrive>& drives, const std::vector<Point>& initial, double dt,
                            const std::vector<Point>& targets, const TubeSpec* tube, std::size_t steps) {
  const std::size_t n = net.size();
  if (drives.size() != n || initial.size() != n || targets.size() != n)
    throw ControlError("network simulation needs one drive, initial state and target per agent");
  if (steps == 0 || !(dt > 0.0)) throw ControlError("invalid time grid");
  for (std::size_t i = 0; i < n; ++i)
    if (drives[i].law && (drives[i].law->x0 - initial[i]).norm() > 1e-12)
      throw ControlError("agent " + std::to_string(i + 1) + ": initial state differs from its feedback law");
  const double h = dt / static_cast<double>(steps);
  std::vector<Point> ctrl(n);
  std::vector<double> maxc(n, 0.0);
  auto rhs = [&](double t, const std::vector<Point>& x, std::vector<Point>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      auto nb = net.neighbors(i);
      Point f = kernel_value(kernels[i], x[i], nb.size(), [&](std::size_t k) -> const Point& { return x[nb[k]]; });
      if (drives[i].law) {
        std::vector<Point> xj;
        for (AgentId l : nb) xj.push_back(x[l]);
        ctrl[i] = feedback(*drives[i].law, std::min(t, dt), x[i], xj);
      } else {
        ctrl[i] = drives[i].direct_input;
      }
      maxc[i] = std::max(maxc[i], ctrl[i].norm());
      out[i] = f + ctrl[i];
    }
  };
  NetworkRun run;
  auto& tr = run.trajectory;
  tr.agents.resize(n);
  tr.states.assign(n, {});
  tr.controls.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) tr.agents[i] = i;
  std::vector<Point> x = initial, a1(n), a2(n), a3(n), a4(n), tmp(n);
  auto record = [&](double t) {
    rhs(t, x, a1);
    tr.times.push_back(t);
    for (std::size_t i = 0; i < n; ++i) {
      tr.states[i].push_back(x[i]);
      tr.controls[i].push_back(ctrl[i]);
    }
  };
  record(0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    double t = h * static_cast<double>(s);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * a1[i];
    rhs(t + 0.5 * h, tmp, a2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * a2[i];
    rhs(t + 0.5 * h, tmp, a3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * a3[i];
    double tn = s + 1 == steps ? dt : t + h;
    rhs(tn, tmp, a4);
    for (std::size_t i = 0; i < n; ++i) x[i] += (h / 6.0) * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
    record(tn);
  }
  for (std::size_t i = 0; i < n; ++i) {
    AgentRunSummary s;
    s.agent = i;
    s.direct = !drives[i].law;
    s.max_control = maxc[i];
    if (drives[i].law) {
      s.arrival_error = (x[i] - targets[i]).norm();
      if (tube) {
        const auto& law = *drives[i].law;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
          double t = tr.times[k];
          s.min_tube_margin = std::min(s.min_tube_margin, tube->beta(t) - (tr.states[i][k] - law.bundle->at(i, t)).norm());
        }
      }
    }
    run.agents.push_back(s);
  }
  return run;
}

Disturbance recorded_disturbance(const Trajectory& traj, const std::vector<AgentId>& neighbors) {
  std::vector<std::size_t> slot;
  for (AgentId l : neighbors) {
    auto it = std::find(traj.agents.begin(), traj.agents.end(), l);
    if (it == traj.agents.end()) throw ControlError("recorded trajectory lacks a neighbor");
    slot.push_back(static_cast<std::size_t>(it - traj.agents.begin()));
  }
  return [&traj, slot](std::size_t s, double t) -> Point {
    const auto& ts = traj.times;
    const auto& xs = traj.states[slot[s]];
    if (t <= ts.front()) return xs.front();
    if (t >= ts.back()) return xs.back();
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    std::size_t k = static_cast<std::size_t>(it - ts.begin()) - 1;
    double u = (t - ts[k]) / (ts[k + 1] - ts[k]);
    return (1.0 - u) * xs[k] + u * xs[k + 1];
  };
}

}  // namespace decabs
