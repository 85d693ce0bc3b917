#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lmc {

using Index = std::int64_t;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr Index kNoIndex = -1;

/// Immutable set of n points in R^N. Point ids are the row indices 0..n-1.
///
/// Construction rejects clouds whose points are not pairwise distinct within
/// `kDedupRelTol` times the bounding-box diagonal; use `deduplicate` first when
/// the input may legitimately contain repeats (e.g. sampler output).
class PointCloud {
 public:
  static constexpr double kDedupRelTol = 1e-12;

  PointCloud() = default;
  explicit PointCloud(RowMatrix points);

  Index size() const noexcept { return points_ ? points_->rows() : 0; }
  int ambient_dim() const noexcept { return points_ ? static_cast<int>(points_->cols()) : 0; }
  bool empty() const noexcept { return size() == 0; }

  const RowMatrix& points() const noexcept { return *points_; }
  std::span<const double> point(Index i) const {
    return {points_->data() + i * points_->cols(), static_cast<std::size_t>(points_->cols())};
  }
  Eigen::Map<const Eigen::VectorXd> row(Index i) const {
    return Eigen::Map<const Eigen::VectorXd>(points_->data() + i * points_->cols(), points_->cols());
  }

  /// Diagonal of the axis-aligned bounding box.
  double diameter() const noexcept { return diameter_; }

  std::shared_ptr<const RowMatrix> shared_points() const noexcept { return points_; }

 private:
  std::shared_ptr<const RowMatrix> points_;
  double diameter_ = 0.0;
};

/// Drops points that duplicate an earlier row within the dedup tolerance.
/// Returns the surviving rows in their original order.
RowMatrix deduplicate(const RowMatrix& points, Index* dropped = nullptr);

struct Neighbor {
  Index index;
  double dist2;
};

/// Exact kd-tree over a point cloud. Ties in distance are broken by lower index.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud, int leaf_size = 12);

  /// The k nearest points to `query`, ascending by (distance, index).
  /// `exclude` (if not kNoIndex) is skipped.
  std::vector<Neighbor> knn(std::span<const double> query, Index k, Index exclude = kNoIndex) const;

  /// All points with squared distance <= r2, ascending by (distance, index).
  std::vector<Neighbor> radius(std::span<const double> query, double r2) const;

  Index size() const noexcept { return static_cast<Index>(perm_.size()); }

 private:
  struct Node {
    Index begin, end;  // range in perm_
    int axis = -1;     // -1 for leaves
    double split = 0.0;
    Index left = -1, right = -1;
    std::vector<double> lo, hi;
  };

  Index build(Index begin, Index end, int leaf_size);
  template <typename Visitor>
  void search(Index node, std::span<const double> q, Visitor& visit) const;
  double dist2(Index i, std::span<const double> q) const;
  static double box_dist2(const Node& node, std::span<const double> q);

  std::shared_ptr<const RowMatrix> points_;
  std::vector<Index> perm_;
  std::vector<Node> nodes_;
};

/// Per-point sorted K-nearest-neighbor lists (self excluded).
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(Index n, Index k, std::vector<Index> indices, std::vector<double> distances);

  Index size() const noexcept { return n_; }
  Index k() const noexcept { return k_; }
  std::span<const Index> neighbors(Index i) const {
    return {indices_.data() + i * k_, static_cast<std::size_t>(k_)};
  }
  std::span<const double> distances(Index i) const {
    return {distances_.data() + i * k_, static_cast<std::size_t>(k_)};
  }

 private:
  Index n_ = 0;
  Index k_ = 0;
  std::vector<Index> indices_;
  std::vector<double> distances_;
};

/// Exact K nearest neighbors of every point in the ambient Euclidean metric.
/// Throws InvalidParameter unless 0 < K < n.
NeighborIndex knn(const PointCloud& cloud, Index k);

/// Largest over all points of the distance to the 50th nearest other point.
double max_fiftieth_neighbor_distance(const PointCloud& cloud);

/// Zero-pads `cloud` to `ambient_dim` coordinates and adds i.i.d. Gaussian
/// noise with standard deviation gamma * d_max to every coordinate.
PointCloud embed_with_noise(const PointCloud& cloud, int ambient_dim, double gamma, std::uint64_t seed);

/// CSV with header `x0,...,x{N-1}` and one point per row.
PointCloud load_csv(const std::string& path);
void save_csv(const PointCloud& cloud, const std::string& path);

/// Generic numeric table reader shared by the point and field formats.
/// Lines starting with '#' are comments; the first non-comment line is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::string> comments;
  RowMatrix values;
};
CsvTable read_csv_table(const std::string& path);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace lmc
