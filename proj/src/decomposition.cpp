#include "decabs/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace decabs {

Decomposition::Decomposition(Point lower, Point upper, std::vector<std::size_t> cells_per_axis)
    : lower_(std::move(lower)), upper_(std::move(upper)), per_axis_(std::move(cells_per_axis)) {
  const int n = static_cast<int>(lower_.size());
  if (n == 0) throw DecompositionError("workspace must have at least one axis");
  if (upper_.size() != n || static_cast<int>(per_axis_.size()) != n)
    throw DecompositionError("workspace bounds and cells_per_axis must have equal length");
  side_ = Point::Zero(n);
  stride_.assign(n, 1);
  count_ = 1;
  for (int k = 0; k < n; ++k) {
    if (!(upper_[k] > lower_[k])) throw DecompositionError("workspace upper bound must exceed lower bound on every axis");
    if (per_axis_[k] == 0) throw DecompositionError("cells_per_axis entries must be positive");
    side_[k] = (upper_[k] - lower_[k]) / static_cast<double>(per_axis_[k]);
    stride_[k] = count_;
    if (count_ > std::numeric_limits<std::size_t>::max() / per_axis_[k])
      throw DecompositionError("too many cells");
    count_ *= per_axis_[k];
  }
  diameter_ = side_.norm();
}

std::vector<std::size_t> Decomposition::coords(CellIndex l) const {
  if (l >= count_) throw DecompositionError("cell index out of range: " + std::to_string(l));
  std::vector<std::size_t> c(dim());
  for (int k = 0; k < dim(); ++k) {
    c[k] = l % per_axis_[k];
    l /= per_axis_[k];
  }
  return c;
}

CellIndex Decomposition::index(const std::vector<std::size_t>& c) const {
  if (static_cast<int>(c.size()) != dim()) throw DecompositionError("coordinate length mismatch");
  CellIndex l = 0;
  for (int k = 0; k < dim(); ++k) {
    if (c[k] >= per_axis_[k]) throw DecompositionError("cell coordinate out of range");
    l += c[k] * stride_[k];
  }
  return l;
}

Point Decomposition::box_lower(CellIndex l) const {
  auto c = coords(l);
  Point p(dim());
  for (int k = 0; k < dim(); ++k) p[k] = face(k, c[k]);
  return p;
}

Point Decomposition::box_upper(CellIndex l) const {
  auto c = coords(l);
  Point p(dim());
  for (int k = 0; k < dim(); ++k) p[k] = c[k] + 1 == per_axis_[k] ? upper_[k] : face(k, c[k] + 1);
  return p;
}

Point Decomposition::reference_point(CellIndex l) const { return 0.5 * (box_lower(l) + box_upper(l)); }

bool Decomposition::contains(const Point& x) const {
  if (x.size() != dim()) return false;
  for (int k = 0; k < dim(); ++k)
    if (!(x[k] >= lower_[k] && x[k] <= upper_[k])) return false;
  return true;
}

CellIndex Decomposition::locate(const Point& x) const {
  if (x.size() != dim()) throw DecompositionError("point dimension mismatch");
  if (!contains(x)) throw DecompositionError("point lies outside the workspace");
  CellIndex l = 0;
  for (int k = 0; k < dim(); ++k) {
    const std::size_t n = per_axis_[k];
    double q = std::floor((x[k] - lower_[k]) / side_[k]);
    std::size_t c = q <= 0 ? 0 : std::min(n - 1, static_cast<std::size_t>(q));
    // Correct rounding so the result agrees with face().
    while (c + 1 < n && x[k] >= face(k, c + 1)) ++c;
    while (c > 0 && x[k] < face(k, c)) --c;
    l += c * stride_[k];
  }
  return l;
}

bool Decomposition::in_cell(CellIndex l, const Point& x, double tol) const {
  Point lo = box_lower(l), hi = box_upper(l);
  for (int k = 0; k < dim(); ++k)
    if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
  return true;
}

Point Decomposition::nearest_point(CellIndex l, const Point& x) const {
  Point lo = box_lower(l), hi = box_upper(l);
  Point p(dim());
  for (int k = 0; k < dim(); ++k) p[k] = std::clamp(x[k], lo[k], hi[k]);
  return p;
}

double Decomposition::distance_to_cell(CellIndex l, const Point& x) const { return (nearest_point(l, x) - x).norm(); }

std::vector<CellIndex> Decomposition::cells_intersecting_ball(const Point& center, double radius) const {
  if (center.size() != dim()) throw DecompositionError("point dimension mismatch");
  if (!(radius >= 0.0)) throw DecompositionError("radius must be nonnegative");
  const int n = dim();
  std::vector<std::size_t> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    double a = center[k] - radius, b = center[k] + radius;
    if (b < lower_[k] || a > upper_[k]) return {};
    double qa = std::floor((a - lower_[k]) / side_[k]) - 1;
    double qb = std::floor((b - lower_[k]) / side_[k]) + 1;
    lo[k] = qa <= 0 ? 0 : std::min<std::size_t>(per_axis_[k] - 1, static_cast<std::size_t>(qa));
    hi[k] = qb <= 0 ? 0 : std::min<std::size_t>(per_axis_[k] - 1, static_cast<std::size_t>(qb));
  }
  std::vector<CellIndex> out;
  std::vector<std::size_t> c = lo;
  const double r2 = radius * radius;
  for (;;) {
    double d2 = 0.0;
    for (int k = 0; k < n; ++k) {
      double a = face(k, c[k]);
      double b = c[k] + 1 == per_axis_[k] ? upper_[k] : face(k, c[k] + 1);
      double g = center[k] < a ? a - center[k] : (center[k] > b ? center[k] - b : 0.0);
      d2 += g * g;
    }
    if (d2 <= r2) {
      CellIndex l = 0;
      for (int k = 0; k < n; ++k) l += c[k] * stride_[k];
      out.push_back(l);
    }
    int k = 0;
    while (k < n && c[k] == hi[k]) {
      c[k] = lo[k];
      ++k;
    }
    if (k == n) break;
    ++c[k];
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Decomposition::ball_leaves_workspace(const Point& center, double radius) const {
  for (int k = 0; k < dim(); ++k)
    if (center[k] - radius < lower_[k] || center[k] + radius > upper_[k]) return true;
  return false;
}

std::vector<std::size_t> cells_for_diameter(const Point& lower, const Point& upper, double max_diameter) {
  if (!(max_diameter > 0.0)) throw DecompositionError("cell diameter bound must be positive");
  const int n = static_cast<int>(lower.size());
  std::vector<std::size_t> out(n);
  const double per = max_diameter / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    double extent = upper[k] - lower[k];
    auto c = static_cast<std::size_t>(std::ceil(extent / per));
    if (c == 0) c = 1;
    // Guard against rounding at the boundary.
    while (extent / static_cast<double>(c) > per) ++c;
    out[k] = c;
  }
  return out;
}

}  // namespace decabs
