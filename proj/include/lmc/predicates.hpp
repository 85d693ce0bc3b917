#pragma once

#include "lmc/point_cloud.hpp"

#include <array>

namespace lmc::predicates {

struct Point2 {
  double x = 0.0, y = 0.0;
};

/// Sign of the orientation of (a, b, c): +1 counter-clockwise, -1 clockwise, 0 collinear.
/// Exact: a floating-point filter with a rational fallback.
int orient2d(Point2 a, Point2 b, Point2 c);

/// Sign of the in-circle determinant: positive when d lies inside the circle
/// through (a, b, c) taken counter-clockwise. Exact, unperturbed.
int incircle(Point2 a, Point2 b, Point2 c, Point2 d);

/// In-circle test on symbolically perturbed lifting heights
///   |p|^2 + e xy + e^2 x^2 + (index-dependent infinitesimals),
/// so it never returns 0 for four distinct points. The quadratic terms resolve
/// cocircular ties consistently for every quadruple sharing a coordinate frame;
/// the index terms (lower `priority` perturbs first) resolve what remains.
int incircle_perturbed(const std::array<Point2, 4>& p, const std::array<Index, 4>& priority);

/// Compares the perturbed lifting heights of two points: -1, 0 or +1.
/// The point with the smaller height is "closer" to the origin.
int compare_lifted(Point2 a, Index priority_a, Point2 b, Index priority_b);

}  // namespace lmc::predicates
