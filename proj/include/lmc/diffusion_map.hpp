#pragma once

#include "lmc/assembly.hpp"
#include "lmc/committor.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

#include <cmath>
#include <optional>

namespace lmc {

struct DmOptions {
  /// Constant bandwidth; nullopt = median distance to the `auto_neighbor`-th
  /// nearest neighbor times `auto_scale`.
  std::optional<double> epsilon;
  Index auto_neighbor = 8;
  double auto_scale = 1.0;
  /// Adaptive bandwidths eps_i = alpha * mean distance to the `adaptive_k` nearest neighbors.
  bool adaptive = false;
  double adaptive_alpha = 1.0;
  Index adaptive_k = 8;
  /// Kernel entries whose Gaussian factor falls below this are dropped; 0 keeps all.
  double truncation = std::exp(-18.0);
};

/// K_ij = e^{-beta U_i} exp(-|p_i - p_j|^2 / (2 eps_i eps_j)) e^{-beta U_j},
/// D = diag(K 1) and the generator L = D^{-1} K - I.
struct DmOperator {
  SparseMatrix k;
  Eigen::VectorXd d;
  SparseMatrix l;
  Eigen::VectorXd epsilon;
};

/// Median over points of the distance to the m-th nearest neighbor.
double default_epsilon(const PointCloud& cloud, Index m = 8);

/// Throws BandwidthError if a kernel row underflows to zero.
DmOperator assemble_dm(const PointCloud& cloud, const GibbsField& gibbs, const DmOptions& options = {});

/// L(C,C) q_C = -L(C,B) 1 by sparse LU. Throws BandwidthError when a free
/// row has (numerically) no off-diagonal mass, i.e. the bandwidth is too small
/// for the sampling density, and SolverError for singular systems.
CommittorField solve_committor_dm(const DmOperator& op, const RegionLabels& labels,
                                  DisconnectedPolicy disconnected = DisconnectedPolicy::kError);

}  // namespace lmc
