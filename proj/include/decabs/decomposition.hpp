#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "decabs/network.hpp"
#include "decabs/vec.hpp"

namespace decabs {

struct DecompositionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Uniform axis-aligned grid over the box [lower, upper]. Cell k along an axis is
// [lower + k*side, lower + (k+1)*side); the last cell also owns the upper face.
class Decomposition {
 public:
  Decomposition() = default;
  Decomposition(Point lower, Point upper, std::vector<std::size_t> cells_per_axis);

  int dim() const { return static_cast<int>(lower_.size()); }
  std::size_t cell_count() const { return count_; }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  const Point& side() const { return side_; }
  const std::vector<std::size_t>& cells_per_axis() const { return per_axis_; }
  double diameter() const { return diameter_; }

  std::vector<std::size_t> coords(CellIndex l) const;
  CellIndex index(const std::vector<std::size_t>& coords) const;

  double face(int axis, std::size_t k) const { return lower_[axis] + static_cast<double>(k) * side_[axis]; }
  Point box_lower(CellIndex l) const;
  Point box_upper(CellIndex l) const;
  Point reference_point(CellIndex l) const;

  bool contains(const Point& x) const;
  CellIndex locate(const Point& x) const;  // throws outside the workspace
  bool in_cell(CellIndex l, const Point& x, double tol = 0.0) const;

  Point nearest_point(CellIndex l, const Point& x) const;
  double distance_to_cell(CellIndex l, const Point& x) const;

  // Ascending indices of the cells whose closed box meets the closed ball.
  std::vector<CellIndex> cells_intersecting_ball(const Point& center, double radius) const;
  bool ball_leaves_workspace(const Point& center, double radius) const;

 private:
  Point lower_, upper_, side_;
  std::vector<std::size_t> per_axis_;
  std::vector<std::size_t> stride_;
  std::size_t count_ = 0;
  double diameter_ = 0.0;
};

// Fewest cells per axis whose diameter stays within `max_diameter` (same count on every axis
// scaled by extent).
std::vector<std::size_t> cells_for_diameter(const Point& lower, const Point& upper, double max_diameter);

}  // namespace decabs
