#include <limits>
#include <random>

#include "decabs/decomposition.hpp"
#include "decabs/dynamics.hpp"
#include "doctest.h"

using namespace decabs;

namespace {
Point random_point(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Point p(n);
  for (int k = 0; k < n; ++k) p[k] = g(rng);
  return p;
}

// Sampled check of |f(x,y) - f(x',y')| <= L2 |x-x'| + L1 |y-y'| and |f| <= M.
void check_constants(const KernelSpec& spec, std::size_t n, double M, std::mt19937_64& rng) {
  AgentBounds b = kernel_bounds(spec, n);
  for (int trial = 0; trial < 2000; ++trial) {
    double scale = trial % 2 ? 0.3 : 8.0;
    Point x = random_point(rng, 2, scale), x2 = random_point(rng, 2, scale);
    std::vector<Point> y, y2;
    double dy2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      y.push_back(random_point(rng, 2, scale));
      y2.push_back(random_point(rng, 2, scale));
      dy2 += (y[k] - y2[k]).squaredNorm();
    }
    Point f = eval_kernel(spec, x, y), f2 = eval_kernel(spec, x2, y2);
    CHECK((f - f2).norm() <= b.L2 * (x - x2).norm() + b.L1 * std::sqrt(dy2) + 1e-12);
    if (std::isfinite(M)) CHECK(f.norm() <= M + 1e-12);
  }
}
}  // namespace

TEST_CASE("saturation") {
  Point x(2);
  x << 3, 4;
  Point s = saturate(x, 2.0);
  CHECK(s.norm() == doctest::Approx(2.0));
  CHECK(s[0] / s[1] == doctest::Approx(0.75));
  Point small(2);
  small << 0.1, -0.2;
  CHECK(saturate(small, 2.0) == small);
}

TEST_CASE("kernel constants hold on samples") {
  std::mt19937_64 rng(5);
  KernelSpec sat{KernelKind::saturated_sum, {}, 1.5};
  for (std::size_t n = 1; n <= 4; ++n) {
    AgentBounds b = kernel_bounds(sat, n);
    CHECK(b.M == doctest::Approx(1.5 * n));
    CHECK(b.L1 == doctest::Approx(std::sqrt(double(n))));
    CHECK(b.L2 == doctest::Approx(double(n)));
    check_constants(sat, n, b.M, rng);
  }
  KernelSpec lin{KernelKind::linear_diffusive, {0.5, 2.0, 1.0}, 0.0};
  AgentBounds b = kernel_bounds(lin, 3);
  CHECK(b.L1 == doctest::Approx(std::sqrt(0.25 + 4.0 + 1.0)));
  CHECK(b.L2 == doctest::Approx(3.5));
  check_constants(lin, 3, std::numeric_limits<double>::infinity(), rng);
}

TEST_CASE("system bounds and validation") {
  Network net({{1}, {}, {1}, {2}});
  std::vector<KernelSpec> k{{KernelKind::saturated_sum, {}, 10.0},
                            {KernelKind::zero, {}, 0.0},
                            {KernelKind::saturated_sum, {}, 10.0},
                            {KernelKind::saturated_sum, {}, 10.0}};
  SystemBounds sb = derive_bounds(net, k, 5.0, std::nullopt);
  CHECK(sb.M == 10.0);
  CHECK(sb.L1 == 1.0);
  CHECK(sb.L2 == 1.0);
  CHECK(sb.n_max == 1u);
  CHECK_THROWS_AS(derive_bounds(net, k, 10.0, std::nullopt), DynamicsError);
  CHECK_THROWS_AS(derive_bounds(net, k, 5.0, 9.0), DynamicsError);
  CHECK(derive_bounds(net, k, 5.0, 12.0).M == 12.0);

  auto bad = k;
  bad[0].rho = 0.0;
  CHECK_THROWS_AS(derive_bounds(net, bad, 5.0, std::nullopt), DynamicsError);
  CHECK_THROWS_AS(kernel_kind_from_string("cubic"), DynamicsError);
  CHECK(kernel_kind_from_string(to_string(KernelKind::linear_diffusive)) == KernelKind::linear_diffusive);
}

TEST_CASE("linear diffusive needs a certified magnitude") {
  Network net({{1}, {0}});
  std::vector<KernelSpec> k{{KernelKind::linear_diffusive, {1.0}, 0.0}, {KernelKind::linear_diffusive, {0.5}, 0.0}};
  CHECK_THROWS_AS(derive_bounds(net, k, 1.0, std::nullopt), DynamicsError);
  Point lo(2), hi(2);
  lo << 0, 0;
  hi << 1, 1;
  Decomposition box(lo, hi, {1, 1});
  // sup |x_l - x_i| on the unit square is sqrt(2)
  CHECK_THROWS_AS(derive_bounds(net, k, 1.0, 1.3, &box), DynamicsError);
  SystemBounds sb = derive_bounds(net, k, 1.0, 1.5, &box);
  CHECK(sb.M_overridden);
  CHECK(sb.L2 == 1.0);
  std::vector<KernelSpec> wrong{{KernelKind::linear_diffusive, {1.0, 2.0}, 0.0}, k[1]};
  CHECK_THROWS_AS(derive_bounds(net, wrong, 1.0, 2.0, &box), DynamicsError);
}
