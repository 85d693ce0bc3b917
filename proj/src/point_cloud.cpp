#include "lmc/point_cloud.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <queue>
#include <random>
#include <sstream>
#include <utility>

namespace lmc {

namespace {

double bbox_diagonal(const RowMatrix& pts) {
  if (pts.rows() == 0) return 0.0;
  const Eigen::RowVectorXd span = pts.colwise().maxCoeff() - pts.colwise().minCoeff();
  return span.norm();
}

bool lex_less(const Neighbor& a, const Neighbor& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}

// Index of the first earlier row within tolerance of each row, or kNoIndex.
std::vector<Index> find_duplicates(const PointCloud& cloud, double tol) {
  KdTree tree(cloud);
  std::vector<Index> dup(static_cast<std::size_t>(cloud.size()), kNoIndex);
  const double tol2 = tol * tol;
  for (Index i = 0; i < cloud.size(); ++i) {
    for (const Neighbor& nb : tree.radius(cloud.point(i), tol2)) {
      if (nb.index < i) {
        dup[static_cast<std::size_t>(i)] = nb.index;
        break;
      }
    }
  }
  return dup;
}

}  // namespace

PointCloud::PointCloud(RowMatrix points) {
  if (points.rows() > 0 && points.cols() < 1) {
    throw InvalidParameter("point cloud needs ambient dimension >= 1");
  }
  if (!points.allFinite()) throw InvalidParameter("point cloud has non-finite coordinates");
  diameter_ = bbox_diagonal(points);
  points_ = std::make_shared<const RowMatrix>(std::move(points));
  if (size() > 1) {
    const auto dup = find_duplicates(*this, kDedupRelTol * diameter_);
    for (Index i = 0; i < size(); ++i) {
      if (dup[static_cast<std::size_t>(i)] != kNoIndex) {
        throw InvalidParameter("points " + std::to_string(dup[static_cast<std::size_t>(i)]) + " and " +
                               std::to_string(i) + " coincide within the dedup tolerance");
      }
    }
  }
}

RowMatrix deduplicate(const RowMatrix& points, Index* dropped) {
  const double tol = PointCloud::kDedupRelTol * bbox_diagonal(points);
  // Greedy pass in original order keeps the first of each cluster.
  RowMatrix kept(points.rows(), points.cols());
  Index n_kept = 0;
  std::vector<Index> order(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
    return a < b;
  });
  std::vector<bool> drop(static_cast<std::size_t>(points.rows()), false);
  // Sweep along the first axis: only rows within tol in x0 can collide.
  for (std::size_t s = 0; s < order.size(); ++s) {
    const Index i = order[s];
    if (drop[static_cast<std::size_t>(i)]) continue;
    for (std::size_t t = s + 1; t < order.size(); ++t) {
      const Index j = order[t];
      if (points(j, 0) - points(i, 0) > tol) break;
      if ((points.row(j) - points.row(i)).norm() <= tol) {
        drop[static_cast<std::size_t>(std::max(i, j))] = true;
      }
    }
  }
  for (Index i = 0; i < points.rows(); ++i) {
    if (!drop[static_cast<std::size_t>(i)]) kept.row(n_kept++) = points.row(i);
  }
  if (dropped) *dropped = points.rows() - n_kept;
  kept.conservativeResize(n_kept, points.cols());
  return kept;
}

// ---------------------------------------------------------------------------
// KdTree

KdTree::KdTree(const PointCloud& cloud, int leaf_size) : points_(cloud.shared_points()) {
  const Index n = cloud.size();
  perm_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
  if (n > 0) {
    nodes_.reserve(static_cast<std::size_t>(2 * n / std::max(1, leaf_size) + 2));
    build(0, n, std::max(1, leaf_size));
  }
}

Index KdTree::build(Index begin, Index end, int leaf_size) {
  const RowMatrix& pts = *points_;
  const int dim = static_cast<int>(pts.cols());
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo.assign(static_cast<std::size_t>(dim), std::numeric_limits<double>::infinity());
  node.hi.assign(static_cast<std::size_t>(dim), -std::numeric_limits<double>::infinity());
  for (Index s = begin; s < end; ++s) {
    const Index p = perm_[static_cast<std::size_t>(s)];
    for (int a = 0; a < dim; ++a) {
      node.lo[static_cast<std::size_t>(a)] = std::min(node.lo[static_cast<std::size_t>(a)], pts(p, a));
      node.hi[static_cast<std::size_t>(a)] = std::max(node.hi[static_cast<std::size_t>(a)], pts(p, a));
    }
  }
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(std::move(node));
  if (end - begin <= leaf_size) return id;

  int axis = 0;
  double widest = -1.0;
  for (int a = 0; a < dim; ++a) {
    const double w = nodes_[static_cast<std::size_t>(id)].hi[static_cast<std::size_t>(a)] -
                     nodes_[static_cast<std::size_t>(id)].lo[static_cast<std::size_t>(a)];
    if (w > widest) {
      widest = w;
      axis = a;
    }
  }
  if (widest <= 0.0) return id;  // all points identical along every axis

  const Index mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](Index a, Index b) { return pts(a, axis) < pts(b, axis); });
  const double split = pts(perm_[static_cast<std::size_t>(mid)], axis);
  const Index left = build(begin, mid, leaf_size);
  const Index right = build(mid, end, leaf_size);
  Node& self = nodes_[static_cast<std::size_t>(id)];
  self.axis = axis;
  self.split = split;
  self.left = left;
  self.right = right;
  return id;
}

double KdTree::dist2(Index i, std::span<const double> q) const {
  const double* p = points_->data() + i * points_->cols();
  double d = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    const double t = p[a] - q[a];
    d += t * t;
  }
  return d;
}

double KdTree::box_dist2(const Node& node, std::span<const double> q) {
  double d = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    double t = 0.0;
    if (q[a] < node.lo[a]) {
      t = node.lo[a] - q[a];
    } else if (q[a] > node.hi[a]) {
      t = q[a] - node.hi[a];
    }
    d += t * t;
  }
  return d;
}

template <typename Visitor>
void KdTree::search(Index id, std::span<const double> q, Visitor& visit) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (box_dist2(node, q) > visit.bound()) return;
  if (node.axis < 0) {
    for (Index s = node.begin; s < node.end; ++s) {
      const Index p = perm_[static_cast<std::size_t>(s)];
      visit.offer(p, dist2(p, q));
    }
    return;
  }
  const bool go_left = q[static_cast<std::size_t>(node.axis)] < node.split;
  search(go_left ? node.left : node.right, q, visit);
  search(go_left ? node.right : node.left, q, visit);
}

std::vector<Neighbor> KdTree::knn(std::span<const double> query, Index k, Index exclude) const {
  if (static_cast<Index>(query.size()) != points_->cols()) {
    throw InvalidParameter("query dimension does not match the cloud");
  }
  struct Visitor {
    Index k;
    Index exclude;
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&lex_less)> heap{&lex_less};
    double bound() const {
      return static_cast<Index>(heap.size()) < k ? std::numeric_limits<double>::infinity() : heap.top().dist2;
    }
    void offer(Index p, double d2) {
      if (p == exclude) return;
      const Neighbor cand{p, d2};
      if (static_cast<Index>(heap.size()) < k) {
        heap.push(cand);
      } else if (lex_less(cand, heap.top())) {
        heap.pop();
        heap.push(cand);
      }
    }
  } visit{k, exclude};
  if (k > 0 && !nodes_.empty()) search(0, query, visit);
  std::vector<Neighbor> out;
  out.reserve(visit.heap.size());
  while (!visit.heap.empty()) {
    out.push_back(visit.heap.top());
    visit.heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Neighbor> KdTree::radius(std::span<const double> query, double r2) const {
  struct Visitor {
    double r2;
    std::vector<Neighbor> found;
    double bound() const { return r2; }
    void offer(Index p, double d2) {
      if (d2 <= r2) found.push_back({p, d2});
    }
  } visit{r2, {}};
  if (!nodes_.empty()) search(0, query, visit);
  std::sort(visit.found.begin(), visit.found.end(), lex_less);
  return std::move(visit.found);
}

// ---------------------------------------------------------------------------
// Neighbor index

NeighborIndex::NeighborIndex(Index n, Index k, std::vector<Index> indices, std::vector<double> distances)
    : n_(n), k_(k), indices_(std::move(indices)), distances_(std::move(distances)) {}

NeighborIndex knn(const PointCloud& cloud, Index k) {
  const Index n = cloud.size();
  if (k < 1 || k >= n) {
    throw InvalidParameter("knn requires 0 < K < n (K=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  KdTree tree(cloud);
  std::vector<Index> idx(static_cast<std::size_t>(n * k));
  std::vector<double> dist(static_cast<std::size_t>(n * k));
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const auto nbrs = tree.knn(cloud.point(i), k, i);
    for (Index j = 0; j < k; ++j) {
      idx[static_cast<std::size_t>(i * k + j)] = nbrs[static_cast<std::size_t>(j)].index;
      dist[static_cast<std::size_t>(i * k + j)] = std::sqrt(nbrs[static_cast<std::size_t>(j)].dist2);
    }
  }
  return NeighborIndex(n, k, std::move(idx), std::move(dist));
}

double max_fiftieth_neighbor_distance(const PointCloud& cloud) {
  constexpr Index kRank = 50;
  if (cloud.size() <= kRank) {
    throw InvalidParameter("d_max needs more than 50 points (n=" + std::to_string(cloud.size()) + ")");
  }
  const NeighborIndex nbrs = knn(cloud, kRank);
  double d_max = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) d_max = std::max(d_max, nbrs.distances(i).back());
  return d_max;
}

PointCloud embed_with_noise(const PointCloud& cloud, int ambient_dim, double gamma, std::uint64_t seed) {
  if (ambient_dim < cloud.ambient_dim()) {
    throw InvalidParameter("embedding dimension is smaller than the input dimension");
  }
  if (!(gamma >= 0.0)) throw InvalidParameter("noise level must be non-negative");
  const double sigma = gamma * max_fiftieth_neighbor_distance(cloud);

  RowMatrix out = RowMatrix::Zero(cloud.size(), ambient_dim);
  out.leftCols(cloud.ambient_dim()) = cloud.points();
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index i = 0; i < out.rows(); ++i) {
      for (int a = 0; a < ambient_dim; ++a) out(i, a) += normal(rng);
    }
  }
  return PointCloud(std::move(out));
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_number(std::string_view field, double& value) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  return res.ec == std::errc() && res.ptr == field.data() + field.size();
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);

  CsvTable table;
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t cols = 0;
  bool have_header = false;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      table.comments.emplace_back(trim(view.substr(1)));
      continue;
    }
    const auto fields = split_fields(view);
    if (!have_header) {
      have_header = true;
      cols = fields.size();
      double probe = 0.0;
      const bool numeric = std::all_of(fields.begin(), fields.end(),
                                       [&](std::string_view f) { return parse_number(f, probe); });
      if (!numeric) {
        for (auto f : fields) table.header.emplace_back(f);
        continue;
      }
      for (std::size_t c = 0; c < cols; ++c) table.header.push_back("x" + std::to_string(c));
    }
    if (fields.size() != cols) {
      throw ParseError("expected " + std::to_string(cols) + " columns, found " + std::to_string(fields.size()),
                       line_no);
    }
    for (auto f : fields) {
      double v = 0.0;
      if (!parse_number(f, v)) throw ParseError("non-numeric field '" + std::string(f) + "'", line_no);
      values.push_back(v);
    }
  }
  if (!have_header) throw ParseError("empty file '" + path + "'", 0);
  const Index rows = static_cast<Index>(values.size() / std::max<std::size_t>(cols, 1));
  table.values = Eigen::Map<RowMatrix>(values.data(), rows, static_cast<Index>(cols));
  return table;
}

PointCloud load_csv(const std::string& path) {
  CsvTable table = read_csv_table(path);
  std::vector<Index> coord_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (table.header[c] == "x" + std::to_string(coord_cols.size())) coord_cols.push_back(static_cast<Index>(c));
  }
  if (coord_cols.empty()) throw ParseError("no coordinate columns x0.. in '" + path + "'", 1);
  if (table.values.rows() == 0) throw ParseError("no points in '" + path + "'", 0);
  RowMatrix pts(table.values.rows(), static_cast<Index>(coord_cols.size()));
  for (std::size_t a = 0; a < coord_cols.size(); ++a) pts.col(static_cast<Index>(a)) = table.values.col(coord_cols[a]);
  return PointCloud(std::move(pts));
}

void save_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  for (int a = 0; a < cloud.ambient_dim(); ++a) out << (a ? "," : "") << 'x' << a;
  out << '\n';
  for (Index i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < cloud.ambient_dim(); ++a) out << (a ? "," : "") << format_double(cloud.points()(i, a));
    out << '\n';
  }
}

}  // namespace lmc
