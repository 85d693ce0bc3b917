#include "lmc/pipeline.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmc {

double temperature_of(const GibbsField& gibbs) { return std::isinf(gibbs.beta) ? 0.0 : 1.0 / gibbs.beta; }

LocalMeshSolution solve_local_mesh(const PointCloud& cloud, const GibbsField& gibbs, const RegionLabels& labels,
                                   const LocalMeshOptions& options) {
  LocalMeshSolution out;
  out.conn = build_connectivity(cloud, options.mesh);
  out.s = symmetrize(assemble_raw(out.conn, gibbs), options.symmetrization);
  out.mass = lumped_mass(out.conn, gibbs);
  out.field = solve_committor(out.s, labels, options.disconnected);
  fill_excluded(cloud, out.field);
  out.field.z = out.mass.z;
  out.field.nu_r = transition_rate(out.field.q, out.s, out.mass.z, temperature_of(gibbs));
  if (options.gradients) out.field.grad = committor_gradients(out.conn, out.field.q, &out.unfit);
  return out;
}

DmSolution solve_diffusion_map(const PointCloud& cloud, const GibbsField& gibbs, const RegionLabels& labels,
                               const DmOptions& options, DisconnectedPolicy disconnected) {
  DmSolution out;
  out.op = assemble_dm(cloud, gibbs, options);
  out.field = solve_committor_dm(out.op, labels, disconnected);
  fill_excluded(cloud, out.field);
  return out;
}

Eigen::VectorXd resample_1d(const PointCloud& cloud, const Eigen::VectorXd& values, const Eigen::VectorXd& at) {
  const Index n = cloud.size();
  if (values.size() != n || n < 2) throw InvalidParameter("resampling needs one value per point and n >= 2");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const auto x = [&](Index i) { return cloud.points()(i, 0); };
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return x(a) < x(b); });
  Eigen::VectorXd out(at.size());
  for (Index k = 0; k < at.size(); ++k) {
    const double t = at(k);
    if (t < x(order.front()) || t > x(order.back())) throw InvalidParameter("resampling abscissa outside the cloud");
    const auto it = std::lower_bound(order.begin(), order.end(), t, [&](Index i, double v) { return x(i) < v; });
    if (it == order.begin()) {
      out(k) = values(*it);
      continue;
    }
    const Index hi = *it, lo = *(it - 1);
    const double s = (t - x(lo)) / (x(hi) - x(lo));
    out(k) = (1.0 - s) * values(lo) + s * values(hi);
  }
  return out;
}

double max_pairwise_sup(const std::vector<Eigen::VectorXd>& fields) {
  double best = 0.0;
  for (std::size_t a = 0; a < fields.size(); ++a) {
    for (std::size_t b = a + 1; b < fields.size(); ++b) {
      best = std::max(best, (fields[a] - fields[b]).cwiseAbs().maxCoeff());
    }
  }
  return best;
}

}  // namespace lmc
