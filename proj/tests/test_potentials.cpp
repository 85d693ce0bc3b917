#include "lmc/errors.hpp"
#include "lmc/potentials.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lmc;

namespace {

Potential make(PotentialKind kind, int ambient = 0) {
  PotentialSpec spec;
  spec.kind = kind;
  spec.ambient_dim = ambient;
  if (kind == PotentialKind::kMueller || kind == PotentialKind::kRuggedMueller) spec.beta = 1.0 / 22.0;
  if (kind == PotentialKind::kFlat) spec.flat_dim = 2;
  return Potential(spec);
}

// Central differences with step 1e-5 times the coordinate scale.
void check_gradient(const Potential& u, double scale, std::uint64_t seed) {
  const int n = u.ambient_dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  const double h = 1e-5 * scale;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(n)), g(x.size());
    for (auto& v : x) v = scale * coord(rng);
    u.gradient(x, g);
    double gnorm = 0.0, err = 0.0;
    for (int c = 0; c < n; ++c) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(c)] += h;
      xm[static_cast<std::size_t>(c)] -= h;
      const double fd = (u.value(xp) - u.value(xm)) / (2 * h);
      err = std::max(err, std::abs(fd - g[static_cast<std::size_t>(c)]));
      gnorm = std::max(gnorm, std::abs(g[static_cast<std::size_t>(c)]));
    }
    CHECK(err <= 1e-6 * std::max(gnorm, 1.0));
  }
}

}  // namespace

TEST_CASE("double well values") {
  auto u = make(PotentialKind::kDoubleWell1d);
  std::vector<double> g(1);
  CHECK(u.value(std::vector{1.0}) == 0.0);
  CHECK(u.value(std::vector{-1.0}) == 0.0);
  CHECK(u.value(std::vector{0.0}) == 1.0);
  u.gradient(std::vector{0.0}, g);
  CHECK(g[0] == 0.0);
}

TEST_CASE("Mueller golden values") {
  // 40-digit evaluation of the four-exponential sum
  CHECK(mueller_value(1.0, 0.0) == doctest::Approx(-53.40700152001106555).epsilon(1e-14));
  CHECK(mueller_value(-0.5, 1.5) == doctest::Approx(-145.2727166931496141).epsilon(1e-14));
  auto u = make(PotentialKind::kMueller);
  CHECK(u.value(std::vector{1.0, 0.0}) == mueller_value(1.0, 0.0));
}

TEST_CASE("rugged term vanishes on the lattice 2kx in Z") {
  auto smooth = make(PotentialKind::kMueller);
  auto rugged = make(PotentialKind::kRuggedMueller);
  for (double x : {-1.0, -0.3, 0.0, 0.4, 0.9}) {
    std::vector<double> p{x, 0.37};
    CHECK(rugged.value(p) == doctest::Approx(smooth.value(p)).epsilon(1e-12));
  }
  std::vector<double> p{0.05, 0.05};  // sin(pi/2)^2 = 1
  CHECK(rugged.value(p) - smooth.value(p) == doctest::Approx(9.0));
  CHECK(rugged.region_energy(p) == smooth.value(p));
}

TEST_CASE("analytic gradients match finite differences") {
  check_gradient(make(PotentialKind::kDoubleWell1d), 1.5, 1);
  check_gradient(make(PotentialKind::kMueller), 1.0, 2);
  check_gradient(make(PotentialKind::kRuggedMueller), 1.0, 3);
  check_gradient(make(PotentialKind::kFlat), 1.0, 4);
  check_gradient(make(PotentialKind::kMueller, 10), 1.0, 5);
}

TEST_CASE("lifted potential ignores the padding") {
  auto u = make(PotentialKind::kMueller, 10);
  CHECK(u.ambient_dim() == 10);
  CHECK(u.intrinsic_dim() == 2);
  std::vector<double> x(10, 0.3), g(10);
  x[0] = -0.4;
  x[1] = 1.2;
  u.gradient(x, g);
  for (int c = 2; c < 10; ++c) CHECK(g[static_cast<std::size_t>(c)] == 0.0);
  CHECK(u.value(x) == mueller_value(-0.4, 1.2));
}

TEST_CASE("energy shift is additive") {
  PotentialSpec spec;
  spec.kind = PotentialKind::kDoubleWell1d;
  spec.energy_shift = 3.5;
  Potential u(spec);
  CHECK(u.value(std::vector{0.0}) == 4.5);
}

TEST_CASE("kind names") {
  for (auto k : {PotentialKind::kDoubleWell1d, PotentialKind::kMueller, PotentialKind::kRuggedMueller,
                 PotentialKind::kFlat})
    CHECK(potential_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(potential_kind_from_string("lennard_jones"), ConfigError);
}

TEST_CASE("region parsing") {
  auto u = make(PotentialKind::kMueller);
  auto a = RegionSpec::parse("U<-120 & y>0.75");
  CHECK(a.contains(u, std::vector{-0.56, 1.44}));
  CHECK_FALSE(a.contains(u, std::vector{0.62, 0.03}));
  auto iv = RegionSpec::parse("x in [-1,-0.9]");
  auto dw = make(PotentialKind::kDoubleWell1d);
  CHECK(iv.contains(dw, std::vector{-0.9}));
  CHECK(iv.contains(dw, std::vector{-1.0}));
  CHECK_FALSE(iv.contains(dw, std::vector{-0.89}));
  CHECK_THROWS_AS(RegionSpec::parse("w < 1"), ConfigError);
  CHECK_THROWS_AS(RegionSpec::parse("x ~ 1"), ConfigError);
  CHECK_THROWS_AS(RegionSpec::parse("x in [1,0]"), ConfigError);
}

TEST_CASE("classify_regions on a 1D grid") {
  RowMatrix p(201, 1);
  for (Index i = 0; i <= 200; ++i) p(i, 0) = -1.0 + 0.01 * static_cast<double>(i);
  PointCloud cloud(p);
  auto u = make(PotentialKind::kDoubleWell1d);
  auto labels = classify_regions(RegionSpec::parse("x<=-0.9"), RegionSpec::parse("x>=0.9"), u, cloud);
  for (Index i = 0; i <= 200; ++i) {
    const bool in_a = p(i, 0) <= -0.9;
    CHECK((labels.label[static_cast<std::size_t>(i)] == Label::kReactant) == in_a);
  }
  CHECK(labels.a.size() + labels.b.size() + labels.c.size() == 201);

  CHECK_THROWS_AS(classify_regions(RegionSpec::parse("x<=-0.9"), RegionSpec::parse("x>=2"), u, cloud), ConfigError);
  CHECK_THROWS_AS(classify_regions(RegionSpec::parse("x<=0.1"), RegionSpec::parse("x>=0"), u, cloud), ConfigError);
}

TEST_CASE("Mueller point (1,0) is not in B") {
  // U(1,0) = -53.4 > -82
  auto u = make(PotentialKind::kMueller);
  auto b = RegionSpec::parse("U<-82 & y<0.35");
  CHECK_FALSE(b.contains(u, std::vector{1.0, 0.0}));
  CHECK(b.contains(u, std::vector{0.62, 0.03}));
}

TEST_CASE("labels do not depend on point order") {
  auto p = test::random_points(2000, 2, 12, -1.0, 1.5);
  auto u = make(PotentialKind::kMueller);
  auto a = RegionSpec::parse("U<-120 & y>0.75");
  auto b = RegionSpec::parse("U<-82 & y<0.35");
  RowMatrix rev = p.colwise().reverse();
  auto la = classify_regions(a, b, u, PointCloud(p));
  auto lb = classify_regions(a, b, u, PointCloud(rev));
  for (Index i = 0; i < 2000; ++i) CHECK(la.label[static_cast<std::size_t>(i)] == lb.label[static_cast<std::size_t>(1999 - i)]);
}
