#pragma once

#include "lmc/assembly.hpp"
#include "lmc/local_mesh.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"
#include "lmc/reference.hpp"

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

namespace lmc {

/// Committor values and the scalars derived from them.
struct CommittorField {
  Eigen::VectorXd q;
  double nu_r = std::numeric_limits<double>::quiet_NaN();
  double z = std::numeric_limits<double>::quiet_NaN();
  double residual = 0.0;  ///< relative residual of the interior system
  std::string solver;     ///< "ldlt", "cg", "lu" or "none" (empty interior)
  Eigen::MatrixXd grad;   ///< n x N ambient gradients; empty until computed
  std::vector<Index> excluded;  ///< free points cut off from A and B (see DisconnectedPolicy)
};

/// What to do with free points that have no path to A or B through the
/// operator's sparsity graph. kExclude leaves them out of the linear system
/// with q = NaN and lists them in `excluded`; `fill_excluded` then copies the
/// value of the nearest solved point.
enum class DisconnectedPolicy { kError, kExclude };

std::string to_string(DisconnectedPolicy p);
DisconnectedPolicy disconnected_policy_from_string(const std::string& name);

/// Solves S(C,C) q_C = -S(C,B) 1 with q = 0 on A and q = 1 on B.
///
/// Sparse LDL^T first; CG with a Jacobi preconditioner (1e-12, 10|C|
/// iterations) when the factorization is near-singular or its residual exceeds
/// 1e-10. Throws SolverError naming a free point that cannot reach A or B
/// through the sparsity graph, or when both solvers fail.
CommittorField solve_committor(const StiffnessMatrix& s, const RegionLabels& labels,
                               DisconnectedPolicy policy = DisconnectedPolicy::kError);

/// Same boundary-value problem for a general (non-symmetric) operator, solved by sparse LU.
CommittorField solve_committor_general(const SparseMatrix& l, const RegionLabels& labels,
                                       DisconnectedPolicy policy = DisconnectedPolicy::kError);

/// Free points with no path to A or B in the sparsity graph of `m`, ascending.
std::vector<Index> unreachable_points(const SparseMatrix& m, const RegionLabels& labels);

/// Replaces q at `field.excluded` by q at the nearest non-excluded point.
void fill_excluded(const PointCloud& cloud, CommittorField& field);

/// nu_R = k_B T q^T S q / Z. Throws NumericalError unless Z > 0.
double transition_rate(const Eigen::VectorXd& q, const StiffnessMatrix& s, double z, double temperature);

/// Per-point gradient of q: least-squares linear fit of q over the ring's
/// vertices in tangent coordinates, mapped back to ambient space (n x N).
/// Points whose ring cannot support a fit get a zero row and are listed in `unfit`.
Eigen::MatrixXd committor_gradients(const Connectivity& conn, const Eigen::VectorXd& q,
                                    std::vector<Index>* unfit = nullptr);

struct ReactiveObservables {
  Eigen::VectorXd rho_r;  ///< q (1 - q) e^{-beta U} / Z
  Eigen::MatrixXd j_r;    ///< k_B T e^{-beta U} / Z grad q, n x N
};

/// Throws InvalidParameter if `field.grad` has not been computed.
ReactiveObservables reactive_observables(const CommittorField& field, const GibbsField& gibbs, double temperature);

struct ErrorMetrics {
  double e_q = std::numeric_limits<double>::quiet_NaN();    ///< ||q - q_ref||_2 / ||q_ref||_2
  double e_nu = std::numeric_limits<double>::quiet_NaN();   ///< |nu_R - nu_R^ref| / nu_R^ref
  double sup_abs = std::numeric_limits<double>::quiet_NaN();
  double sup_rel = std::numeric_limits<double>::quiet_NaN();  ///< over points with |q_ref| > 1e-8
  Index clamped = 0;  ///< points outside the reference grid
};

/// Compares q against the reference interpolated to the points. `coords`
/// supplies the coordinates used for interpolation (the cloud, or the
/// noise-free generating points of an embedded cloud).
ErrorMetrics error_metrics(const Eigen::VectorXd& q, double nu_r, const PointCloud& coords, const GridField& ref);

/// Interpolated reference values at every point of `coords`.
Eigen::VectorXd interpolate_reference(const GridField& ref, const PointCloud& coords, Index* clamped = nullptr);

}  // namespace lmc
