#include "lmc/predicates.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmc::predicates {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0;  // 2^-53
constexpr double kCcwErrBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIccErrBound = (10.0 + 96.0 * kEps) * kEps;

struct ExactPoint {
  Rational x, y;
  explicit ExactPoint(Point2 p) : x(p.x), y(p.y) {}
};

int sign(const Rational& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

Rational exact_orient(const ExactPoint& a, const ExactPoint& b, const ExactPoint& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Cofactors of the lifting column of the 4x4 matrix [x y h 1]; the
// determinant for any height vector h is sum_r h_r * cof_r.
std::array<Rational, 4> lifting_cofactors(const std::array<ExactPoint, 4>& p) {
  std::array<Rational, 4> cof;
  for (int r = 0; r < 4; ++r) {
    std::array<const ExactPoint*, 3> rest{};
    int k = 0;
    for (int s = 0; s < 4; ++s) {
      if (s != r) rest[static_cast<std::size_t>(k++)] = &p[static_cast<std::size_t>(s)];
    }
    const Rational m = exact_orient(*rest[0], *rest[1], *rest[2]);
    cof[static_cast<std::size_t>(r)] = (r % 2 == 0) ? m : Rational(-m);
  }
  return cof;
}

int incircle_fast(Point2 a, Point2 b, Point2 c, Point2 d, bool& certain) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kIccErrBound * permanent;
  certain = det > bound || -det > bound;
  return det > 0 ? 1 : (det < 0 ? -1 : 0);
}

}  // namespace

int orient2d(Point2 a, Point2 b, Point2 c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  const double bound = kCcwErrBound * (std::abs(left) + std::abs(right));
  if (det > bound || -det > bound) return det > 0 ? 1 : -1;
  return sign(exact_orient(ExactPoint(a), ExactPoint(b), ExactPoint(c)));
}

int incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  bool certain = false;
  const int s = incircle_fast(a, b, c, d, certain);
  if (certain) return s;
  const std::array<ExactPoint, 4> p{ExactPoint(a), ExactPoint(b), ExactPoint(c), ExactPoint(d)};
  const auto cof = lifting_cofactors(p);
  Rational det = 0;
  for (std::size_t r = 0; r < 4; ++r) det += (p[r].x * p[r].x + p[r].y * p[r].y) * cof[r];
  return sign(det);
}

int incircle_perturbed(const std::array<Point2, 4>& pts, const std::array<Index, 4>& priority) {
  bool certain = false;
  const int s = incircle_fast(pts[0], pts[1], pts[2], pts[3], certain);
  if (certain) return s;

  const std::array<ExactPoint, 4> p{ExactPoint(pts[0]), ExactPoint(pts[1]), ExactPoint(pts[2]), ExactPoint(pts[3])};
  const auto cof = lifting_cofactors(p);
  Rational det = 0;
  for (std::size_t r = 0; r < 4; ++r) det += (p[r].x * p[r].x + p[r].y * p[r].y) * cof[r];
  if (int sg = sign(det)) return sg;
  det = 0;
  for (std::size_t r = 0; r < 4; ++r) det += (p[r].x * p[r].y) * cof[r];
  if (int sg = sign(det)) return sg;
  det = 0;
  for (std::size_t r = 0; r < 4; ++r) det += (p[r].x * p[r].x) * cof[r];
  if (int sg = sign(det)) return sg;

  // Index infinitesimals: the lowest priority value carries the dominant term.
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::sort(order.begin(), order.end(), [&](std::size_t u, std::size_t v) { return priority[u] < priority[v]; });
  for (std::size_t r : order) {
    if (int sg = sign(cof[r])) return sg;
  }
  return 0;
}

int compare_lifted(Point2 a, Index priority_a, Point2 b, Index priority_b) {
  const double ha = a.x * a.x + a.y * a.y;
  const double hb = b.x * b.x + b.y * b.y;
  const double tol = 4.0 * kEps * (ha + hb);
  if (ha < hb - tol) return -1;
  if (ha > hb + tol) return 1;

  const ExactPoint ea(a), eb(b);
  const auto cmp = [](const Rational& u, const Rational& v) { return u < v ? -1 : (u > v ? 1 : 0); };
  if (int c = cmp(ea.x * ea.x + ea.y * ea.y, eb.x * eb.x + eb.y * eb.y)) return c;
  if (int c = cmp(ea.x * ea.y, eb.x * eb.y)) return c;
  if (int c = cmp(ea.x * ea.x, eb.x * eb.x)) return c;
  // A lower priority value means a larger infinitesimal height, i.e. farther.
  if (priority_a == priority_b) return 0;
  return priority_a < priority_b ? 1 : -1;
}

}  // namespace lmc::predicates
