#include "lmc/errors.hpp"
#include "lmc/reference.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace lmc;

namespace {

Potential double_well(double shift = 0.0) {
  PotentialSpec spec;
  spec.energy_shift = shift;
  return Potential(spec);
}

Potential flat(int dim) {
  PotentialSpec spec;
  spec.kind = PotentialKind::kFlat;
  spec.flat_dim = dim;
  return Potential(spec);
}

Potential mueller(double shift = 0.0) {
  PotentialSpec spec;
  spec.kind = PotentialKind::kMueller;
  spec.beta = 1.0 / 22.0;
  spec.energy_shift = shift;
  return Potential(spec);
}

const RegionSpec kLeftEnd = RegionSpec::parse("x<=-1");
const RegionSpec kRightEnd = RegionSpec::parse("x>=1");
const RegionSpec kDwA = RegionSpec::parse("x<=-0.9");
const RegionSpec kDwB = RegionSpec::parse("x>=0.9");

}  // namespace

TEST_CASE("uniform grid nodes are exact and mirror symmetric") {
  auto g = uniform_grid_1d(-1.0, 1.0, 2001);
  for (Index k = 0; k < 2001; ++k) CHECK(g.points()(k, 0) == -g.points()(2000 - k, 0));
  CHECK(g.points()(0, 0) == -1.0);
  CHECK(g.points()(2000, 0) == 1.0);
  CHECK_THROWS_AS(uniform_grid_1d(1.0, 0.0, 10), InvalidParameter);
}

TEST_CASE("1D finite elements, flat potential") {
  auto f = fem_solve_1d(flat(1), -1.0, 1.0, 41, kLeftEnd, kRightEnd);
  for (Index k = 0; k < 41; ++k) CHECK(f.values(k) == doctest::Approx(static_cast<double>(k) / 40.0).epsilon(1e-13));
  CHECK(f.nu_r == doctest::Approx(1.0 / 4.0).epsilon(1e-12));  // slope 1/2 on length 2, Z = 2
}

TEST_CASE("1D finite elements, double well") {
  auto u = double_well();
  auto f = fem_solve_1d(u, -1.0, 1.0, 1001, kDwA, kDwB);
  CHECK(f.values(500) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(f.values(0) == 0.0);
  CHECK(f.values(1000) == 1.0);

  // the closed form is taken between the innermost Dirichlet nodes, which
  // do not coincide with -0.9 and 0.9 on this grid
  auto fine = fem_solve_1d(u, -1.0, 1.0, 1000, kDwA, kDwB);
  double a = -1.0, b = 1.0;
  for (Index k = 0; k < 1000; ++k) {
    const double x = fine.coordinate(0, k);
    if (x <= -0.9) a = x;
    if (x >= 0.9 && b == 1.0) b = x;
  }
  double sup = 0.0;
  for (Index k = 0; k < 1000; ++k) {
    const double x = fine.coordinate(0, k);
    if (x <= a || x >= b) continue;
    sup = std::max(sup, std::abs(fine.values(k) - closed_form_1d(u, a, b, x)));
  }
  CHECK(sup <= 1e-5);
  CHECK_THROWS_AS(fem_solve_1d(u, -1.0, 1.0, 100, RegionSpec::parse("x<=0.1"), RegionSpec::parse("x>=0")),
                  ConfigError);
}

TEST_CASE("closed form committor") {
  CHECK(closed_form_1d(flat(1), -0.5, 1.5, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(closed_form_1d(double_well(), -0.9, 0.9, 0.0) == doctest::Approx(0.5).epsilon(1e-10));
  // 40-digit adaptive quadrature
  CHECK(closed_form_1d(double_well(), -0.9, 0.9, 0.5) == doctest::Approx(0.8441470217826827345).epsilon(1e-10));
  CHECK(closed_form_1d(double_well(), -0.9, 0.9, 0.2) == doctest::Approx(0.6551248660236661862).epsilon(1e-10));
  CHECK_THROWS_AS(closed_form_1d(double_well(), 0.9, -0.9, 0.0), InvalidParameter);
}

TEST_CASE("2D grid, flat strip") {
  auto u = flat(2);
  auto f = grid_solve_2d(u, {0.0, 0.0}, {1.0, 0.5}, 41, 21, RegionSpec::parse("x<=0.1"), RegionSpec::parse("x>=0.9"));
  for (Index ix = 0; ix < 41; ++ix) {
    const double x = f.coordinate(0, ix);
    const double expected = std::clamp((x - 0.1) / 0.8, 0.0, 1.0);
    for (Index iy = 0; iy < 21; ++iy) CHECK(std::abs(f.values(ix * 21 + iy) - expected) <= 1e-10);
  }
  CHECK(f.nu_r == doctest::Approx(1.25).epsilon(1e-10));  // |grad q|^2 = 1/0.64 over 0.8/1 of the area
  CHECK_THROWS_AS(grid_solve_2d(u, {0.0, 0.0}, {1.0, 0.5}, 41, 21, RegionSpec::parse("x<=0.1"),
                                RegionSpec::parse("x>=2")),
                  ConfigError);
}

TEST_CASE("2D grid rate is invariant under an energy shift and self-converges") {
  auto a = RegionSpec::parse("U<-120 & y>0.75"), b = RegionSpec::parse("U<-82 & y<0.35");
  const std::vector<double> lo{-1.5, -0.5}, hi{1.0, 2.0};
  auto f = grid_solve_2d(mueller(), lo, hi, 128, 128, a, b);
  auto shifted = grid_solve_2d(mueller(40.0), lo, hi, 128, 128, RegionSpec::parse("U<-80 & y>0.75"),
                               RegionSpec::parse("U<-42 & y<0.35"));
  CHECK(std::abs(shifted.nu_r - f.nu_r) <= 1e-10 * f.nu_r);
  auto fine = grid_solve_2d(mueller(), lo, hi, 256, 256, a, b);
  CHECK(std::abs(fine.nu_r - f.nu_r) <= 0.005 * fine.nu_r);
}

TEST_CASE("grid field files round trip") {
  auto dir = test::scratch_dir("grid");
  auto f = grid_solve_2d(flat(2), {0.0, 0.0}, {1.0, 0.5}, 17, 16, RegionSpec::parse("x<=0.1"),
                         RegionSpec::parse("x>=0.9"));
  save_grid_field(f, (dir / "g.csv").string(), {"note=ignored"});
  auto back = load_grid_field((dir / "g.csv").string());
  CHECK(back.dim == 2);
  CHECK(back.nodes == f.nodes);
  CHECK(back.values == f.values);
  CHECK(back.nu_r == f.nu_r);
  CHECK(back.interpolate(std::vector{0.5, 0.25}) == doctest::Approx(0.5).epsilon(1e-12));
  bool clamped = false;
  back.interpolate(std::vector{2.0, 0.25}, &clamped);
  CHECK(clamped);
}

TEST_CASE("Monte Carlo committor") {
  auto u = double_well();
  McOptions opt;
  opt.n_paths = 2000;
  opt.dt = 1e-4;
  opt.seed = 5;

  SUBCASE("symmetric start") {
    auto r = mc_committor(u, {0.0}, kDwA, kDwB, opt);
    CHECK(std::abs(r.estimate - 0.5) <= 3 * r.std_error);
    CHECK(r.used == 2000);
    auto again = mc_committor(u, {0.0}, kDwA, kDwB, opt);
    CHECK(again.estimate == r.estimate);
  }
  SUBCASE("next to B") {
    opt.dt = 1e-6;
    opt.n_paths = 200;
    auto r = mc_committor(u, {0.899}, kDwA, kDwB, opt);
    CHECK(r.estimate > 0.9);
  }
  SUBCASE("agrees with the closed form") {
    auto r = mc_committor(u, {0.5}, kDwA, kDwB, opt);
    CHECK(std::abs(r.estimate - closed_form_1d(u, -0.9, 0.9, 0.5)) <= 3 * r.std_error);
  }
  SUBCASE("calibration across seeds") {
    // z-scores of 20 independent estimates: sum of squares against chi^2_20 (99.9% quantile 45.3)
    const double truth = closed_form_1d(u, -0.9, 0.9, 0.3);
    opt.n_paths = 300;
    opt.dt = 1e-3;
    double chi2 = 0.0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
      opt.seed = 1000 + s;
      auto r = mc_committor(u, {0.3}, kDwA, kDwB, opt);
      chi2 += std::pow((r.estimate - truth) / r.std_error, 2);
    }
    CHECK(chi2 < 45.3);
  }
  SUBCASE("censoring") {
    opt.max_steps = 10;
    opt.n_paths = 100;
    auto r = mc_committor(u, {0.0}, kDwA, kDwB, opt);
    CHECK(r.censored == 100);
    CHECK(r.warning.has_value());
  }
  SUBCASE("start inside a set is rejected") {
    CHECK_THROWS_AS(mc_committor(u, {0.95}, kDwA, kDwB, opt), InvalidParameter);
  }
}
