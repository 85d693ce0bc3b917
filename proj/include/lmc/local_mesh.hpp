#pragma once

#include "lmc/point_cloud.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace lmc {

/// Local PCA frame at a point. `basis` columns are e^1..e^N ordered by
/// descending eigenvalue; the first `dim` span the tangent plane.
struct TangentFrame {
  Index center = kNoIndex;
  Eigen::VectorXd origin;      ///< the point itself (projection center)
  Eigen::VectorXd barycenter;  ///< mean of the neighborhood
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
  int dim = 0;

  Eigen::MatrixXd tangent() const { return basis.leftCols(dim); }
};

/// Picks d maximizing lambda_d / lambda_{d+1} subject to a minimum ratio of 10.
/// Returns nullopt when no gap qualifies.
std::optional<int> auto_dimension(const Eigen::VectorXd& descending_eigenvalues, int max_dim);

/// PCA of a neighborhood given as rows of `neighbors`; `origin` is the point the
/// frame is attached to. `dim` nullopt selects the dimension by eigen-gap.
/// Throws DegenerateNeighborhood (naming `center`) if the covariance rank is below dim.
TangentFrame fit_frame(const Eigen::Ref<const Eigen::VectorXd>& origin, const RowMatrix& neighbors,
                       std::optional<int> dim, Index center = kNoIndex);

/// Frame of point i from its K nearest neighbors (the point itself excluded).
TangentFrame pca_frame(const PointCloud& cloud, const NeighborIndex& nbrs, Index i, std::optional<int> dim);

/// Tangent coordinates <p_k - origin, e^a>, a <= dim, one row per input row.
Eigen::MatrixXd project_to_tangent(const TangentFrame& frame, const RowMatrix& points);

/// The same projection expressed in ambient coordinates (normal components removed).
Eigen::VectorXd project_ambient(const TangentFrame& frame, const Eigen::Ref<const Eigen::VectorXd>& p);

/// Simplexes incident to a center point in its projected neighborhood.
///
/// `vertices[0]` is the center (its id may be kNoIndex for a free point) and
/// sits at the origin of `coords`. Each simplex stores positions into
/// `vertices`; slot 0 is always the center and, for d = 2, the triangle is
/// counter-clockwise in tangent coordinates. Unused slots hold -1.
struct FirstRing {
  Index center = kNoIndex;
  int dim = 0;
  std::vector<Index> vertices;
  Eigen::MatrixXd coords;  ///< |vertices| x dim
  std::vector<std::array<int, 3>> simplices;
  bool boundary = false;  ///< the center lies on the hull of its projected neighborhood

  Index vertex_id(int local) const { return vertices[static_cast<std::size_t>(local)]; }
  /// Ids of the vertices actually used by some simplex (center included), ascending.
  std::vector<Index> used_vertices() const;
  bool isolated() const noexcept { return simplices.empty(); }
};

/// Delaunay first ring of the origin among `projected` (one row per neighbor,
/// `ids` aligned with the rows). Ties are resolved by symbolic perturbation;
/// simplexes with d-volume below 1e-14 * scale^d are dropped.
FirstRing delaunay_first_ring(Index center, const Eigen::MatrixXd& projected, const std::vector<Index>& ids);

enum class FailurePolicy { kAbort, kIsolate };

struct MeshOptions {
  Index k = 0;                  ///< 0 = default (6 for d = 1, 16 otherwise)
  std::optional<int> dim = 2;   ///< nullopt = per-point eigen-gap, global d by majority
  FailurePolicy on_failure = FailurePolicy::kAbort;
};

Index default_k(int dim);

/// Local meshes for every point.
struct Connectivity {
  int dim = 0;
  Index k = 0;
  std::vector<FirstRing> rings;
  std::vector<Eigen::MatrixXd> tangents;  ///< N x d tangent basis per point
  std::vector<Index> isolated;            ///< points whose ring could not be built
  std::vector<Index> flagged;             ///< auto-d disagreed with the global d

  Index size() const noexcept { return static_cast<Index>(rings.size()); }
};

Connectivity build_connectivity(const PointCloud& cloud, const MeshOptions& options);
Connectivity build_connectivity(const PointCloud& cloud, const NeighborIndex& nbrs, const MeshOptions& options);

/// Text dump, one record per point: `i : a,b,c;a,b,c;...` with global ids.
std::string format_connectivity(const Connectivity& conn);
void save_connectivity(const Connectivity& conn, const std::string& path);

}  // namespace lmc
