#include "lmc/local_mesh.hpp"

#include "lmc/errors.hpp"
#include "lmc/predicates.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace lmc {

namespace {

constexpr double kMinGapRatio = 10.0;
constexpr double kRankTol = 1e-12;
constexpr double kDegenerateVolume = 1e-14;

}  // namespace

std::optional<int> auto_dimension(const Eigen::VectorXd& eig, int max_dim) {
  std::optional<int> best;
  double best_ratio = 0.0;
  const int limit = std::min<int>(max_dim, static_cast<int>(eig.size()) - 1);
  for (int d = 1; d <= limit; ++d) {
    const double hi = eig(d - 1);
    const double lo = eig(d);
    if (!(hi > 0.0)) break;
    const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (ratio >= kMinGapRatio && ratio > best_ratio) {
      best_ratio = ratio;
      best = d;
    }
  }
  return best;
}

TangentFrame fit_frame(const Eigen::Ref<const Eigen::VectorXd>& origin, const RowMatrix& neighbors,
                       std::optional<int> dim, Index center) {
  const Index n_dim = neighbors.cols();
  if (neighbors.rows() == 0) throw DegenerateNeighborhood("empty neighborhood", center);
  if (dim && (*dim < 1 || *dim > n_dim)) {
    throw InvalidParameter("intrinsic dimension " + std::to_string(*dim) + " outside [1, N]");
  }

  TangentFrame frame;
  frame.center = center;
  frame.origin = origin;
  frame.barycenter = neighbors.colwise().mean().transpose();
  const RowMatrix centered = neighbors.rowwise() - frame.barycenter.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DegenerateNeighborhood("covariance eigensolver failed", center);
  frame.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  frame.basis = solver.eigenvectors().rowwise().reverse();
  for (Index c = 0; c < frame.basis.cols(); ++c) {
    Index arg = 0;
    frame.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (frame.basis(arg, c) < 0.0) frame.basis.col(c) *= -1.0;
  }

  if (dim) {
    frame.dim = *dim;
  } else {
    const int cap = static_cast<int>(std::min<Index>(n_dim, neighbors.rows()));
    frame.dim = auto_dimension(frame.eigenvalues, cap).value_or(static_cast<int>(n_dim));
  }
  const double top = frame.eigenvalues(0);
  if (!(top > 0.0) || frame.eigenvalues(frame.dim - 1) <= kRankTol * top) {
    throw DegenerateNeighborhood("neighborhood covariance has rank below " + std::to_string(frame.dim), center);
  }
  return frame;
}

TangentFrame pca_frame(const PointCloud& cloud, const NeighborIndex& nbrs, Index i, std::optional<int> dim) {
  const auto ids = nbrs.neighbors(i);
  RowMatrix rows(static_cast<Index>(ids.size()), cloud.ambient_dim());
  for (std::size_t r = 0; r < ids.size(); ++r) rows.row(static_cast<Index>(r)) = cloud.points().row(ids[r]);
  if (dim && static_cast<Index>(ids.size()) < *dim + 1) {
    throw DegenerateNeighborhood("fewer than d+1 neighbors", i);
  }
  return fit_frame(cloud.row(i), rows, dim, i);
}

Eigen::MatrixXd project_to_tangent(const TangentFrame& frame, const RowMatrix& points) {
  const RowMatrix rel = points.rowwise() - frame.origin.transpose();
  return rel * frame.tangent();
}

Eigen::VectorXd project_ambient(const TangentFrame& frame, const Eigen::Ref<const Eigen::VectorXd>& p) {
  Eigen::VectorXd rel = p - frame.origin;
  for (Index a = frame.dim; a < frame.basis.cols(); ++a) rel -= rel.dot(frame.basis.col(a)) * frame.basis.col(a);
  return rel;
}

std::vector<Index> FirstRing::used_vertices() const {
  std::vector<Index> out;
  for (const auto& s : simplices) {
    for (int v : s) {
      if (v >= 0) out.push_back(vertex_id(v));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void ring_1d(FirstRing& ring, double scale) {
  int left = -1, right = -1;
  for (int v = 1; v < static_cast<int>(ring.vertices.size()); ++v) {
    const double x = ring.coords(v, 0);
    if (x < 0.0 && (left < 0 || x > ring.coords(left, 0))) left = v;
    if (x > 0.0 && (right < 0 || x < ring.coords(right, 0))) right = v;
  }
  for (int v : {left, right}) {
    if (v >= 0 && std::abs(ring.coords(v, 0)) >= kDegenerateVolume * scale) ring.simplices.push_back({0, v, -1});
  }
  ring.boundary = left < 0 || right < 0;
}

void ring_2d(FirstRing& ring, double scale) {
  using predicates::Point2;
  const int m = static_cast<int>(ring.vertices.size());
  std::vector<Point2> p(static_cast<std::size_t>(m));
  for (int v = 0; v < m; ++v) p[static_cast<std::size_t>(v)] = {ring.coords(v, 0), ring.coords(v, 1)};
  const auto prio = [&](int v) { return ring.vertices[static_cast<std::size_t>(v)]; };
  const auto pt = [&](int v) { return p[static_cast<std::size_t>(v)]; };
  const Point2 origin{0.0, 0.0};

  std::vector<int> cand;
  for (int v = 1; v < m; ++v) {
    if (pt(v).x != 0.0 || pt(v).y != 0.0) cand.push_back(v);
  }
  if (cand.size() < 2) {
    ring.boundary = true;
    return;
  }

  int start = cand.front();
  for (int v : cand) {
    if (predicates::compare_lifted(pt(v), prio(v), pt(start), prio(start)) < 0) start = v;
  }

  std::vector<std::array<int, 3>> tris;
  // side = +1 wraps counter-clockwise (candidates left of origin->cur), -1 clockwise.
  const auto wrap = [&](int side) {
    int cur = start;
    for (std::size_t guard = 0; guard <= cand.size(); ++guard) {
      int best = -1;
      for (int k : cand) {
        if (k == cur || predicates::orient2d(origin, pt(cur), pt(k)) != side) continue;
        if (best < 0) {
          best = k;
          continue;
        }
        const bool inside =
            side > 0 ? predicates::incircle_perturbed({origin, pt(cur), pt(best), pt(k)},
                                                      {ring.center, prio(cur), prio(best), prio(k)}) > 0
                     : predicates::incircle_perturbed({origin, pt(best), pt(cur), pt(k)},
                                                      {ring.center, prio(best), prio(cur), prio(k)}) > 0;
        if (inside) best = k;
      }
      if (best < 0) return false;
      tris.push_back(side > 0 ? std::array<int, 3>{0, cur, best} : std::array<int, 3>{0, best, cur});
      cur = best;
      if (cur == start) return true;
    }
    return false;
  };

  const bool closed = wrap(+1);
  if (!closed) wrap(-1);
  ring.boundary = !closed;

  const double min_area = kDegenerateVolume * scale * scale;
  for (const auto& t : tris) {
    const Point2 a = pt(t[1]), b = pt(t[2]);
    if (0.5 * std::abs(a.x * b.y - a.y * b.x) >= min_area) ring.simplices.push_back(t);
  }
}

}  // namespace

FirstRing delaunay_first_ring(Index center, const Eigen::MatrixXd& projected, const std::vector<Index>& ids) {
  const int dim = static_cast<int>(projected.cols());
  if (dim != 1 && dim != 2) throw InvalidParameter("local meshes are built for d = 1 or d = 2 only");
  if (static_cast<Index>(ids.size()) != projected.rows()) throw InvalidParameter("ids and coordinates differ in size");

  FirstRing ring;
  ring.center = center;
  ring.dim = dim;
  ring.vertices.reserve(ids.size() + 1);
  ring.vertices.push_back(center);
  ring.vertices.insert(ring.vertices.end(), ids.begin(), ids.end());
  ring.coords = Eigen::MatrixXd::Zero(projected.rows() + 1, dim);
  ring.coords.bottomRows(projected.rows()) = projected;

  const double scale = projected.rows() > 0 ? projected.rowwise().norm().maxCoeff() : 0.0;
  if (projected.rows() < dim || !(scale > 0.0)) {
    ring.boundary = true;
    return ring;
  }
  if (dim == 1) {
    ring_1d(ring, scale);
  } else {
    ring_2d(ring, scale);
  }
  return ring;
}

Index default_k(int dim) { return dim == 1 ? 6 : 16; }

Connectivity build_connectivity(const PointCloud& cloud, const MeshOptions& options) {
  const int guess = options.dim.value_or(2);
  Index k = options.k > 0 ? options.k : default_k(guess);
  k = std::min(k, cloud.size() - 1);
  return build_connectivity(cloud, knn(cloud, k), options);
}

Connectivity build_connectivity(const PointCloud& cloud, const NeighborIndex& nbrs, const MeshOptions& options) {
  const Index n = cloud.size();
  Connectivity conn;
  conn.k = nbrs.k();

  std::vector<int> point_dim(static_cast<std::size_t>(n), 0);
  if (options.dim) {
    conn.dim = *options.dim;
  } else {
    std::map<int, Index> votes;
    for (Index i = 0; i < n; ++i) {
      try {
        point_dim[static_cast<std::size_t>(i)] = pca_frame(cloud, nbrs, i, std::nullopt).dim;
      } catch (const DegenerateNeighborhood&) {
        point_dim[static_cast<std::size_t>(i)] = 0;
      }
      ++votes[point_dim[static_cast<std::size_t>(i)]];
    }
    Index best_votes = -1;
    for (const auto& [d, count] : votes) {
      if (d > 0 && count > best_votes) {
        best_votes = count;
        conn.dim = d;
      }
    }
    for (Index i = 0; i < n; ++i) {
      if (point_dim[static_cast<std::size_t>(i)] != conn.dim) conn.flagged.push_back(i);
    }
  }
  if (conn.dim != 1 && conn.dim != 2) {
    throw InvalidParameter("intrinsic dimension " + std::to_string(conn.dim) + " is not supported (d = 1 or 2)");
  }

  conn.rings.resize(static_cast<std::size_t>(n));
  conn.tangents.resize(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(dynamic, 256)
  for (Index i = 0; i < n; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      const TangentFrame frame = pca_frame(cloud, nbrs, i, conn.dim);
      const auto ids = nbrs.neighbors(i);
      RowMatrix rows(static_cast<Index>(ids.size()), cloud.ambient_dim());
      for (std::size_t r = 0; r < ids.size(); ++r) rows.row(static_cast<Index>(r)) = cloud.points().row(ids[r]);
      conn.rings[slot] = delaunay_first_ring(i, project_to_tangent(frame, rows), {ids.begin(), ids.end()});
      conn.tangents[slot] = frame.tangent();
    } catch (const Error&) {
      failures[slot] = std::current_exception();
      conn.rings[slot] = FirstRing{};
      conn.rings[slot].center = i;
      conn.rings[slot].dim = conn.dim;
      conn.rings[slot].vertices = {i};
      conn.rings[slot].coords = Eigen::MatrixXd::Zero(1, conn.dim);
      conn.tangents[slot] = Eigen::MatrixXd::Zero(cloud.ambient_dim(), conn.dim);
    }
  }

  // d = 1: a one-sided ring is a cloud endpoint only if no wider query finds a
  // neighbor on the other side; otherwise a sampling gap would cut the line.
  if (conn.dim == 1) {
    std::optional<KdTree> tree;
    for (Index i = 0; i < n; ++i) {
      const auto slot = static_cast<std::size_t>(i);
      if (failures[slot] || !conn.rings[slot].boundary) continue;
      if (!tree) tree.emplace(cloud);
      const TangentFrame frame = pca_frame(cloud, nbrs, i, 1);
      for (Index k = std::min(2 * nbrs.k(), n - 1);; k = std::min(2 * k, n - 1)) {
        const auto found = tree->knn({cloud.points().row(i).data(), static_cast<std::size_t>(cloud.ambient_dim())}, k, i);
        std::vector<Index> ids;
        RowMatrix rows(static_cast<Index>(found.size()), cloud.ambient_dim());
        for (const Neighbor& nb : found) {
          rows.row(static_cast<Index>(ids.size())) = cloud.points().row(nb.index);
          ids.push_back(nb.index);
        }
        FirstRing ring = delaunay_first_ring(i, project_to_tangent(frame, rows), ids);
        if (!ring.boundary || k == n - 1) {
          conn.rings[slot] = std::move(ring);
          break;
        }
      }
    }
  }

  for (Index i = 0; i < n; ++i) {
    if (failures[static_cast<std::size_t>(i)]) {
      if (options.on_failure == FailurePolicy::kAbort) std::rethrow_exception(failures[static_cast<std::size_t>(i)]);
      conn.isolated.push_back(i);
    } else if (conn.rings[static_cast<std::size_t>(i)].isolated()) {
      conn.isolated.push_back(i);
    }
  }
  return conn;
}

std::string format_connectivity(const Connectivity& conn) {
  std::ostringstream out;
  for (const FirstRing& ring : conn.rings) {
    out << ring.center << " :";
    bool first = true;
    for (const auto& s : ring.simplices) {
      out << (first ? " " : ";");
      first = false;
      for (int v = 0; v <= ring.dim; ++v) out << (v ? "," : "") << ring.vertex_id(s[static_cast<std::size_t>(v)]);
    }
    out << '\n';
  }
  return out.str();
}

void save_connectivity(const Connectivity& conn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  out << format_connectivity(conn);
}

}  // namespace lmc
