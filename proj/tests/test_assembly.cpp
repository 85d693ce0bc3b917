#include "lmc/assembly.hpp"
#include "lmc/errors.hpp"
#include "lmc/reference.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lmc;

namespace {

GibbsField flat_gibbs(Index n) { return GibbsField{std::vector<double>(static_cast<std::size_t>(n), 0.0), 1.0}; }

Connectivity mesh(const RowMatrix& p, int dim, Index k) {
  MeshOptions opt;
  opt.dim = dim;
  opt.k = k;
  return build_connectivity(PointCloud(p), opt);
}

// Rings of a small planar set where every other point is a neighbor.
Connectivity full_rings(const RowMatrix& p) {
  Connectivity conn;
  conn.dim = 2;
  for (Index i = 0; i < p.rows(); ++i) {
    Eigen::MatrixXd proj(p.rows() - 1, 2);
    std::vector<Index> ids;
    for (Index j = 0; j < p.rows(); ++j) {
      if (j == i) continue;
      proj.row(static_cast<Index>(ids.size())) = p.row(j) - p.row(i);
      ids.push_back(j);
    }
    conn.rings.push_back(delaunay_first_ring(i, proj, ids));
  }
  return conn;
}

RawStiffness raw_pair(double a01, double a10) {
  std::vector<Eigen::Triplet<double, Index>> t;
  if (a01 != 0.0) t.emplace_back(0, 1, a01);
  if (a10 != 0.0) t.emplace_back(1, 0, a10);
  RawStiffness raw;
  raw.a.resize(2, 2);
  raw.a.setFromTriplets(t.begin(), t.end());
  return raw;
}

double entry(const StiffnessMatrix& s, Index i, Index j) { return s.matrix().coeff(i, j); }

// Jittered grid on [0,1]^2 with roughly uniform spacing.
RowMatrix unit_square(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.25, 0.25);
  const double h = 1.0 / (side - 1);
  RowMatrix p(side * side, 2);
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      const bool edge_a = a == 0 || a == side - 1, edge_b = b == 0 || b == side - 1;
      p.row(a * side + b) << h * (a + (edge_a ? 0.0 : u(rng))), h * (b + (edge_b ? 0.0 : u(rng)));
    }
  }
  return p;
}

void check_symmetric_zero_rows(const StiffnessMatrix& s) {
  const SparseMatrix& m = s.matrix();
  SparseMatrix t = m.transpose();
  CHECK((m - t).norm() == 0.0);
  const double scale = m.cwiseAbs().sum() / static_cast<double>(m.rows());
  Eigen::VectorXd row_sum = m * Eigen::VectorXd::Ones(m.cols());
  CHECK(row_sum.cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

}  // namespace

TEST_CASE("1D uniform grid, flat potential") {
  const double h = 0.125;
  std::vector<double> xs;
  for (int i = 0; i <= 8; ++i) xs.push_back(h * i);
  auto conn = mesh(test::line_points(xs), 1, 4);
  auto raw = assemble_raw(conn, flat_gibbs(9));
  for (Index i = 0; i < 8; ++i) {
    CHECK(raw.a.coeff(i, i + 1) == doctest::Approx(-1.0 / h).epsilon(1e-14));
    CHECK(raw.a.coeff(i + 1, i) == doctest::Approx(-1.0 / h).epsilon(1e-14));
  }
  CHECK(raw.a.coeff(0, 2) == 0.0);

  auto mass = lumped_mass(conn, flat_gibbs(9));
  for (Index i = 1; i < 8; ++i) CHECK(mass.mass(i) == doctest::Approx(h).epsilon(1e-14));
  CHECK(mass.mass(0) == doctest::Approx(h / 2).epsilon(1e-14));
  CHECK(mass.z == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("equilateral triangle weights") {
  RowMatrix p(3, 2);
  p << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2;
  auto conn = full_rings(p);
  auto raw = assemble_raw(conn, flat_gibbs(3));
  const double expected = -1.0 / (2.0 * std::sqrt(3.0));
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      if (i != j) CHECK(raw.a.coeff(i, j) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("right angle opposite an edge gives zero weight") {
  RowMatrix p(3, 2);
  p << 0, 0, 1, 0, 0, 1;
  auto conn = full_rings(p);
  auto raw = assemble_raw(conn, flat_gibbs(3));
  CHECK(std::abs(raw.a.coeff(1, 2)) < 1e-16);
  CHECK(raw.a.coeff(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));  // -1/2 cot 45
}

TEST_CASE("Gibbs weight is the vertex mean of e^{-beta U}") {
  RowMatrix p(3, 2);
  p << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2;
  auto conn = full_rings(p);
  GibbsField g{{0.0, 1.0, 2.0}, 0.5};
  auto raw = assemble_raw(conn, g);
  const double w = (1.0 + std::exp(-0.5) + std::exp(-1.0)) / 3.0;
  CHECK(raw.a.coeff(0, 1) == doctest::Approx(-w / (2.0 * std::sqrt(3.0))).epsilon(1e-14));
}

TEST_CASE("degenerate 1D edge is an assembly error") {
  Connectivity conn;
  conn.dim = 1;
  FirstRing ring;
  ring.center = 0;
  ring.dim = 1;
  ring.vertices = {0, 1};
  ring.coords = Eigen::MatrixXd::Zero(2, 1);
  ring.simplices = {{0, 1, -1}};
  FirstRing other = ring;
  other.center = 1;
  other.vertices = {1, 0};
  conn.rings = {ring, other};
  CHECK_THROWS_AS(assemble_raw(conn, flat_gibbs(2)), AssemblyError);
}

TEST_CASE("mean symmetrization rule") {
  auto s = symmetrize_mean(raw_pair(-2.0, -3.0));
  CHECK(entry(s, 0, 1) == -2.5);
  CHECK(entry(s, 1, 0) == -2.5);
  CHECK(entry(s, 0, 0) == 2.5);
  auto half = symmetrize_mean(raw_pair(-2.0, 0.0));
  CHECK(entry(half, 0, 1) == -1.0);
  CHECK(entry(half, 1, 0) == -1.0);
}

TEST_CASE("minmax symmetrization rule") {
  CHECK(entry(symmetrize_minmax(raw_pair(-2.0, -3.0)), 0, 1) == -2.0);
  CHECK(entry(symmetrize_minmax(raw_pair(1.0, -4.0)), 0, 1) == -4.0);
  CHECK(entry(symmetrize_minmax(raw_pair(2.0, 5.0)), 0, 1) == 2.0);
  CHECK(entry(symmetrize_minmax(raw_pair(-2.0, 0.0)), 0, 1) == 0.0);
  auto s = symmetrize_minmax(raw_pair(-2.0, -3.0));
  CHECK(entry(s, 1, 0) == -2.0);
  CHECK(entry(s, 1, 1) == 2.0);
}

TEST_CASE("symmetrization names") {
  CHECK(symmetrization_from_string("mean") == Symmetrization::kMean);
  CHECK(symmetrization_from_string(to_string(Symmetrization::kMinMax)) == Symmetrization::kMinMax);
  CHECK_THROWS_AS(symmetrization_from_string("average"), ConfigError);
}

TEST_CASE("symmetric stiffness with zero row sums on irregular clouds") {
  auto p = unit_square(25, 1);
  auto conn = mesh(p, 2, 16);
  std::vector<double> u(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i) u[static_cast<std::size_t>(i)] = std::sin(3 * p(i, 0)) + p(i, 1) * p(i, 1);
  auto raw = assemble_raw(conn, GibbsField{u, 2.0});
  check_symmetric_zero_rows(symmetrize_mean(raw));
  check_symmetric_zero_rows(symmetrize_minmax(raw));

  // random cloud in R^3 on a curved sheet
  auto r = test::random_points(800, 2, 3);
  RowMatrix sheet(800, 3);
  sheet.leftCols(2) = r;
  for (Index i = 0; i < 800; ++i) sheet(i, 2) = 0.3 * r(i, 0) * r(i, 1);
  auto c2 = mesh(sheet, 2, 16);
  auto raw2 = assemble_raw(c2, flat_gibbs(800));
  check_symmetric_zero_rows(symmetrize_mean(raw2));
  check_symmetric_zero_rows(symmetrize_minmax(raw2));
}

TEST_CASE("acute interior rings give an M-matrix under mean symmetrization") {
  // equilateral lattice: every triangle acute
  RowMatrix p(15 * 15, 2);
  for (int a = 0; a < 15; ++a)
    for (int b = 0; b < 15; ++b) p.row(a * 15 + b) << a + 0.5 * b, b * std::sqrt(3.0) / 2;
  auto conn = mesh(p, 2, 12);
  auto s = symmetrize_mean(assemble_raw(conn, flat_gibbs(p.rows())));
  const SparseMatrix& m = s.matrix();
  for (Index i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      if (it.col() == i) {
        CHECK(it.value() >= 0.0);
      } else {
        CHECK(it.value() <= 1e-15);
      }
    }
  }
}

TEST_CASE("1D assembly equals the finite element matrix") {
  std::vector<double> xs;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 300; ++i) xs.push_back(u(rng));
  std::sort(xs.begin(), xs.end());
  auto p = test::line_points(xs);
  std::vector<double> energy;
  for (double x : xs) energy.push_back((x * x - 1) * (x * x - 1));
  GibbsField g{energy, 1.0};
  auto s = symmetrize_minmax(assemble_raw(mesh(p, 1, 16), g));
  Eigen::VectorXd nodes = Eigen::Map<Eigen::VectorXd>(xs.data(), 300);
  auto fe = fem_stiffness_1d(nodes, energy, 1.0);
  SparseMatrix diff = s.matrix() - fe.matrix();
  SparseMatrix ref = fe.matrix();
  CHECK(diff.coeffs().cwiseAbs().maxCoeff() <= 1e-14 * ref.coeffs().cwiseAbs().maxCoeff());
}

TEST_CASE("mass, partition function and Dirichlet energy on a flat unit square") {
  auto p = unit_square(30, 2);
  auto conn = mesh(p, 2, 16);
  auto g = flat_gibbs(p.rows());
  auto mass = lumped_mass(conn, g);
  CHECK(mass.z == doctest::Approx(1.0).epsilon(0.05));
  CHECK(mass.zero_mass.empty());
  CHECK(mass.mass.minCoeff() > 0.0);

  auto s = symmetrize_mean(assemble_raw(conn, g));
  Eigen::VectorXd x = p.col(0);
  CHECK(s.quadratic_form(x) == doctest::Approx(1.0).epsilon(0.05));

  auto scaled = mesh(3.0 * p, 2, 16);
  auto mass3 = lumped_mass(scaled, g);
  for (Index i = 0; i < p.rows(); ++i) CHECK(mass3.mass(i) == doctest::Approx(9.0 * mass.mass(i)).epsilon(1e-12));
  CHECK(mass3.z == doctest::Approx(9.0 * mass.z).epsilon(1e-12));
}
