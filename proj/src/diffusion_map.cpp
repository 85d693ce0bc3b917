#include "lmc/diffusion_map.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <limits>

namespace lmc {

double default_epsilon(const PointCloud& cloud, Index m) {
  if (cloud.size() <= m) throw InvalidParameter("too few points for the default bandwidth");
  const NeighborIndex nbrs = knn(cloud, m);
  std::vector<double> dist(static_cast<std::size_t>(cloud.size()));
  for (Index i = 0; i < cloud.size(); ++i) dist[static_cast<std::size_t>(i)] = nbrs.distances(i)[static_cast<std::size_t>(m - 1)];
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  if (dist.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(dist.begin(), mid);
  return 0.5 * (lower + upper);
}

DmOperator assemble_dm(const PointCloud& cloud, const GibbsField& gibbs, const DmOptions& options) {
  const Index n = cloud.size();
  if (gibbs.size() != n) throw InvalidParameter("Gibbs field and cloud differ in size");
  if (options.truncation < 0.0 || options.truncation >= 1.0) throw InvalidParameter("truncation must lie in [0, 1)");

  DmOperator op;
  op.epsilon.resize(n);
  if (options.adaptive) {
    if (!(options.adaptive_alpha > 0.0)) throw InvalidParameter("adaptive bandwidth scale must be positive");
    const NeighborIndex nbrs = knn(cloud, options.adaptive_k);
    for (Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (double r : nbrs.distances(i)) s += r;
      op.epsilon(i) = options.adaptive_alpha * s / static_cast<double>(options.adaptive_k);
    }
  } else {
    const double eps = options.epsilon ? *options.epsilon
                                       : options.auto_scale * default_epsilon(cloud, options.auto_neighbor);
    op.epsilon.setConstant(eps);
  }
  for (Index i = 0; i < n; ++i) {
    if (!(op.epsilon(i) > 0.0) || !std::isfinite(op.epsilon(i))) throw BandwidthError("bandwidth must be positive", i);
  }

  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = gibbs.weight(i);
  const double eps_max = op.epsilon.maxCoeff();
  // Gaussian factor >= truncation  <=>  d^2 <= -2 ln(truncation) eps_i eps_j
  const double cut = options.truncation > 0.0 ? -2.0 * std::log(options.truncation)
                                              : std::numeric_limits<double>::infinity();
  const KdTree tree(cloud);

  std::vector<std::vector<std::pair<Index, double>>> rows(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64)
  for (Index i = 0; i < n; ++i) {
    const double ei = op.epsilon(i);
    std::vector<Neighbor> cand;
    if (std::isfinite(cut)) {
      cand = tree.radius(cloud.point(i), cut * ei * eps_max);
    } else {
      cand = tree.knn(cloud.point(i), n);
    }
    auto& row = rows[static_cast<std::size_t>(i)];
    row.reserve(cand.size());
    for (const Neighbor& nb : cand) {
      const Index j = nb.index;
      const double ee = ei * op.epsilon(j);
      if (nb.dist2 > cut * ee) continue;
      // Fixed operand order (lower index first) keeps K bitwise symmetric.
      const Index lo = std::min(i, j), hi = std::max(i, j);
      const double g = std::exp(-nb.dist2 / (2.0 * ee));
      const double kij = w[static_cast<std::size_t>(lo)] * g * w[static_cast<std::size_t>(hi)];
      if (kij > 0.0 || i == j) row.emplace_back(j, kij);
    }
    std::sort(row.begin(), row.end());
  }

  std::vector<Eigen::Triplet<double, Index>> kt, lt;
  op.d.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    double d = 0.0;
    for (const auto& [j, v] : row) d += v;
    if (!(d > 0.0)) throw BandwidthError("kernel row underflows to zero", i);
    op.d(i) = d;
    double off = 0.0;
    for (const auto& [j, v] : row) {
      kt.emplace_back(i, j, v);
      if (j != i) {
        const double p = v / d;
        off += p;
        lt.emplace_back(i, j, p);
      }
    }
    lt.emplace_back(i, i, -off);
  }
  op.k.resize(n, n);
  op.k.setFromTriplets(kt.begin(), kt.end());
  op.l.resize(n, n);
  op.l.setFromTriplets(lt.begin(), lt.end());
  return op;
}

CommittorField solve_committor_dm(const DmOperator& op, const RegionLabels& labels, DisconnectedPolicy disconnected) {
  constexpr double kMinOffDiagonalMass = 1e-10;
  for (Index i : labels.c) {
    if (-op.l.coeff(i, i) < kMinOffDiagonalMass) {
      throw BandwidthError("kernel row is localized on its own point; increase epsilon", i);
    }
  }
  return solve_committor_general(op.l, labels, disconnected);
}

}  // namespace lmc
