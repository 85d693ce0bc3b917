#pragma once

#include "lmc/local_mesh.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace lmc {

/// Weighted least-squares polynomial patch over a stencil, expressed in the
/// PCA frame at `frame.origin`: the surface is X(t) = origin + T t + N z(t)
/// and each scalar field f is approximated by f(t). Weights are
/// exp(-|t|^2 / h^2) with h the mean tangent distance of the stencil.
struct MlsPatch {
  TangentFrame frame;
  int degree = 2;
  bool downgraded = false;  ///< quadratic system was rank deficient, degree 1 used
  double bandwidth = 0.0;
  Eigen::MatrixXd normal_coef;  ///< terms x (N - d)
  Eigen::MatrixXd field_coef;   ///< terms x fields

  int dim() const noexcept { return frame.dim; }
  Eigen::VectorXd lift(const Eigen::VectorXd& t) const;
  Eigen::VectorXd field(const Eigen::VectorXd& t) const;
  /// Partial derivatives of field f with respect to t at t = 0.
  Eigen::VectorXd field_partials(int f) const;
  /// Metric g = I + (dz)^T dz at t = 0.
  Eigen::MatrixXd metric() const;
  /// Surface gradient of field f at t = 0 in tangent parameter coordinates (g^{-1} df).
  Eigen::VectorXd tangent_gradient(int f) const;
  /// The same gradient as an ambient vector (sum_a v_a dX/dt_a).
  Eigen::VectorXd ambient_gradient(int f) const;
};

/// Fits a patch of the given degree (1 or 2) centered at `center` using the
/// cloud points listed in `stencil`. `fields` has one row per cloud point
/// (may have zero columns). Throws DegenerateNeighborhood if even the linear
/// fit is rank deficient.
MlsPatch mls_fit(const PointCloud& cloud, std::span<const Index> stencil, const Eigen::VectorXd& center, int dim,
                 const Eigen::MatrixXd& fields, int degree = 2);

enum class TraceReason { kReachedB, kMaxSteps, kStalled, kBoundary };

std::string to_string(TraceReason reason);

struct TraceOptions {
  Index max_steps = 10000;
  double min_step = 0.0;  ///< 0 = 1e-6 * cloud diameter
  bool reverse = false;   ///< follow -grad q (towards A) instead
  Index k = 16;           ///< stencil size around the current position
  int dim = 2;
  int degree = 2;
};

struct FlowTrace {
  RowMatrix points;      ///< polyline, one ambient point per row
  Eigen::VectorXd q;     ///< MLS committor value at each vertex
  Eigen::VectorXd j_norm;  ///< |J_R| at each vertex
  TraceReason reason = TraceReason::kMaxSteps;
  Index steps = 0;
  Index downgraded = 0;  ///< steps whose patch fell back to degree 1
};

/// Follows the reactive current J_R = k_B T rho grad q from `start` by ring
/// stepping: at the current position p_c the stencil, frame and Delaunay ring
/// are rebuilt, the ray along the MLS gradient is intersected with the ring
/// boundary and the hit is lifted onto the MLS surface. A step that would
/// lower q is halved until it does not; if it shrinks below min_step the
/// trace stops as stalled. The trace ends when the nearest cloud point lies
/// in B (A when reversed).
FlowTrace trace_reactive_flow(const PointCloud& cloud, const KdTree& tree, const Eigen::VectorXd& q,
                              const RegionLabels& labels, const GibbsField& gibbs, double z, double temperature,
                              const Eigen::VectorXd& start, const TraceOptions& options = {});

}  // namespace lmc
