#pragma once

#include "lmc/assembly.hpp"
#include "lmc/committor.hpp"
#include "lmc/diffusion_map.hpp"
#include "lmc/local_mesh.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

namespace lmc {

struct LocalMeshOptions {
  MeshOptions mesh;
  Symmetrization symmetrization = Symmetrization::kMinMax;
  DisconnectedPolicy disconnected = DisconnectedPolicy::kError;
  bool gradients = false;
};

/// Everything produced on the way from a cloud to its committor.
struct LocalMeshSolution {
  Connectivity conn;
  StiffnessMatrix s;
  MassVector mass;
  CommittorField field;
  std::vector<Index> unfit;  ///< points without a gradient fit
};

/// Rings -> stiffness -> mass -> q, nu_R. `gibbs` carries the per-point energies.
/// Excluded points (DisconnectedPolicy::kExclude) are filled before nu_R is evaluated.
LocalMeshSolution solve_local_mesh(const PointCloud& cloud, const GibbsField& gibbs, const RegionLabels& labels,
                                   const LocalMeshOptions& options = {});

struct DmSolution {
  DmOperator op;
  CommittorField field;
};

DmSolution solve_diffusion_map(const PointCloud& cloud, const GibbsField& gibbs, const RegionLabels& labels,
                               const DmOptions& options = {},
                               DisconnectedPolicy disconnected = DisconnectedPolicy::kError);

/// k_B T for a Gibbs field (0 at infinite beta).
double temperature_of(const GibbsField& gibbs);

/// Linear interpolation of per-point values of a 1D cloud (first coordinate)
/// at the abscissae `at`, which must lie inside the cloud's range.
Eigen::VectorXd resample_1d(const PointCloud& cloud, const Eigen::VectorXd& values, const Eigen::VectorXd& at);

/// Largest sup-norm distance over all pairs of equally sized vectors.
double max_pairwise_sup(const std::vector<Eigen::VectorXd>& fields);

}  // namespace lmc
