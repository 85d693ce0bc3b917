#include "lmc/errors.hpp"
#include "lmc/pipeline.hpp"
#include "lmc/reactive_flow.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <numeric>

using namespace lmc;

namespace {

std::vector<Index> all_of(const PointCloud& cloud) {
  std::vector<Index> s(static_cast<std::size_t>(cloud.size()));
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

// Symmetric 5x5 stencil around the origin in the parameter plane.
RowMatrix stencil_grid(double h) {
  RowMatrix p(25, 2);
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b) p.row((a + 2) * 5 + b + 2) << h * a, h * b;
  return p;
}

// Jittered 2D strip [0,1] x [0,0.3] embedded in R^3 on the plane z = 0.25.
struct Strip {
  PointCloud cloud;
  RowMatrix generating;
  GibbsField gibbs;
  RegionLabels labels;
  LocalMeshSolution sol;
};

Strip flat_strip(double energy_shift = 0.0) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const int nx = 41, ny = 13;
  const double h = 1.0 / (nx - 1);
  RowMatrix p(nx * ny, 3);
  for (int a = 0; a < nx; ++a)
    for (int b = 0; b < ny; ++b) p.row(a * ny + b) << h * (a + u(rng)), h * (b + u(rng)), 0.25;
  Strip s;
  s.cloud = PointCloud(p);
  s.gibbs = GibbsField{std::vector<double>(static_cast<std::size_t>(p.rows()), energy_shift), 1.0};
  std::vector<Label> lab(static_cast<std::size_t>(p.rows()), Label::kFree);
  for (Index i = 0; i < p.rows(); ++i) {
    if (p(i, 0) < 0.05) lab[static_cast<std::size_t>(i)] = Label::kReactant;
    if (p(i, 0) > 0.95) lab[static_cast<std::size_t>(i)] = Label::kProduct;
  }
  s.labels = RegionLabels::from_labels(lab);
  LocalMeshOptions opt;
  opt.mesh.dim = 2;
  s.sol = solve_local_mesh(s.cloud, s.gibbs, s.labels, opt);
  return s;
}

}  // namespace

TEST_CASE("MLS reproduces a linear field on a plane") {
  auto t = test::random_points(30, 2, 3);
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.6, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
  RowMatrix p(30, 3);
  for (Index i = 0; i < 30; ++i) p.row(i) = (rot * Eigen::Vector3d(t(i, 0), t(i, 1), 0.0)).transpose();
  PointCloud cloud(p);
  const Eigen::Vector3d g(0.7, -0.2, 1.3);
  Eigen::MatrixXd fields(30, 2);
  fields.col(0) = p * g;
  fields.col(1).setConstant(4.0);
  const Eigen::Vector3d center = (rot * Eigen::Vector3d(0.1, -0.05, 0.0));
  auto patch = mls_fit(cloud, all_of(cloud), center, 2, fields);
  CHECK(patch.degree == 2);
  // the surface gradient of x -> g.x is the tangential part of g
  const Eigen::Vector3d normal = rot.col(2);
  const Eigen::Vector3d expected = g - g.dot(normal) * normal;
  CHECK((patch.ambient_gradient(0) - expected).norm() <= 1e-10);
  CHECK(patch.ambient_gradient(1).norm() <= 1e-10);
  CHECK(std::abs(patch.field(Eigen::Vector2d::Zero())(0) - center.dot(g)) <= 1e-10);
  CHECK((patch.lift(Eigen::Vector2d(0.3, 0.2)) - center).dot(normal) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("MLS recovers a paraboloid") {
  auto t = stencil_grid(0.1);
  RowMatrix p(25, 3);
  for (Index i = 0; i < 25; ++i) p.row(i) << t(i, 0), t(i, 1), t.row(i).squaredNorm();
  PointCloud cloud(p);
  auto patch = mls_fit(cloud, all_of(cloud), Eigen::Vector3d::Zero(), 2, Eigen::MatrixXd(25, 0));
  CHECK(patch.lift(Eigen::Vector2d::Zero()).norm() <= 1e-12);
  for (const Eigen::Vector2d& s : {Eigen::Vector2d(0.05, 0.0), Eigen::Vector2d(-0.12, 0.07), Eigen::Vector2d(0.0, 0.15)}) {
    const Eigen::Vector3d x = patch.lift(s);
    CHECK(std::abs(x(2) - (x(0) * x(0) + x(1) * x(1))) <= 1e-6);
  }
  CHECK((patch.metric() - Eigen::Matrix2d::Identity()).norm() <= 1e-10);  // flat at the vertex
}

TEST_CASE("MLS degrades to a linear fit on a rank-deficient stencil") {
  // points on two lines through the center cannot determine all quadratic terms
  RowMatrix p(8, 2);
  p << 1, 0, 2, 0, -1, 0, -2, 0, 0, 1, 0, 2, 0, -1, 0, -2;
  PointCloud cloud(p);
  Eigen::MatrixXd q = p.col(0) + 2.0 * p.col(1);
  auto patch = mls_fit(cloud, all_of(cloud), Eigen::Vector2d::Zero(), 2, q);
  CHECK(patch.downgraded);
  CHECK(patch.degree == 1);
  CHECK((patch.ambient_gradient(0) - Eigen::Vector2d(1.0, 2.0)).norm() <= 1e-10);
}

TEST_CASE("trace across a flat strip") {
  auto s = flat_strip();
  KdTree tree(s.cloud);
  const double temp = 1.0;
  auto tr = trace_reactive_flow(s.cloud, tree, s.sol.field.q, s.labels, s.gibbs, s.sol.mass.z, temp,
                                Eigen::Vector3d(0.3, 0.15, 0.25));
  CHECK(tr.reason == TraceReason::kReachedB);
  CHECK(tr.steps > 3);
  for (Index k = 1; k < tr.points.rows(); ++k) {
    CHECK(tr.points(k, 0) > tr.points(k - 1, 0));
    CHECK(tr.q(k) >= tr.q(k - 1) - 1e-9);
    CHECK(std::abs(tr.points(k, 2) - 0.25) <= 1e-10);
  }
  CHECK(tr.points(tr.points.rows() - 1, 0) > 0.9);

  SUBCASE("reverse heads to A") {
    TraceOptions opt;
    opt.reverse = true;
    auto back = trace_reactive_flow(s.cloud, tree, s.sol.field.q, s.labels, s.gibbs, s.sol.mass.z, temp,
                                    Eigen::Vector3d(0.6, 0.15, 0.25), opt);
    CHECK(back.reason == TraceReason::kReachedB);
    CHECK(back.points(back.points.rows() - 1, 0) < 0.1);
  }
  SUBCASE("start in B") {
    auto none = trace_reactive_flow(s.cloud, tree, s.sol.field.q, s.labels, s.gibbs, s.sol.mass.z, temp,
                                    Eigen::Vector3d(0.98, 0.1, 0.25));
    CHECK(none.steps == 0);
    CHECK(none.points.rows() == 1);
    CHECK(none.reason == TraceReason::kReachedB);
  }
  SUBCASE("step cap") {
    TraceOptions opt;
    opt.max_steps = 2;
    auto capped = trace_reactive_flow(s.cloud, tree, s.sol.field.q, s.labels, s.gibbs, s.sol.mass.z, temp,
                                      Eigen::Vector3d(0.3, 0.15, 0.25), opt);
    CHECK(capped.reason == TraceReason::kMaxSteps);
    CHECK(capped.steps == 2);
  }
  SUBCASE("constant field stalls") {
    Eigen::VectorXd flat_q = Eigen::VectorXd::Constant(s.cloud.size(), 0.5);
    auto stalled = trace_reactive_flow(s.cloud, tree, flat_q, s.labels, s.gibbs, s.sol.mass.z, temp,
                                       Eigen::Vector3d(0.3, 0.15, 0.25));
    CHECK(stalled.reason == TraceReason::kStalled);
    CHECK(stalled.steps == 0);
  }
}

TEST_CASE("trace geometry ignores a constant energy shift") {
  auto a = flat_strip(0.0);
  auto b = flat_strip(3.0);
  KdTree ta(a.cloud), tb(b.cloud);
  auto ra = trace_reactive_flow(a.cloud, ta, a.sol.field.q, a.labels, a.gibbs, a.sol.mass.z, 1.0,
                                Eigen::Vector3d(0.2, 0.1, 0.25));
  auto rb = trace_reactive_flow(b.cloud, tb, b.sol.field.q, b.labels, b.gibbs, b.sol.mass.z, 1.0,
                                Eigen::Vector3d(0.2, 0.1, 0.25));
  REQUIRE(ra.points.rows() == rb.points.rows());
  CHECK((ra.points - rb.points).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((ra.j_norm - rb.j_norm).cwiseAbs().maxCoeff() <= 1e-10 * ra.j_norm.maxCoeff());
}

TEST_CASE("trace argument checks") {
  auto s = flat_strip();
  KdTree tree(s.cloud);
  CHECK_THROWS_AS(trace_reactive_flow(s.cloud, tree, s.sol.field.q, s.labels, s.gibbs, s.sol.mass.z, 1.0,
                                      Eigen::Vector2d(0.3, 0.1)),
                  InvalidParameter);
  CHECK(to_string(TraceReason::kBoundary) == "boundary");
}
