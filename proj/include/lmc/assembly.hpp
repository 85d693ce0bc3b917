#pragma once

#include "lmc/local_mesh.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace lmc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Per-ring Dirichlet-form entries A_ij (off-diagonal only). A_ij and A_ji come
/// from different rings and generally differ.
struct RawStiffness {
  SparseMatrix a;
};

/// Symmetric stiffness with zero row sums: S_ij = S_ji bitwise, S_ii = -sum_{k != i} S_ik.
class StiffnessMatrix {
 public:
  StiffnessMatrix() = default;
  explicit StiffnessMatrix(SparseMatrix s) : s_(std::move(s)) {}

  const SparseMatrix& matrix() const noexcept { return s_; }
  Index size() const noexcept { return s_.rows(); }
  double quadratic_form(const Eigen::VectorXd& q) const;

 private:
  SparseMatrix s_;
};

enum class Symmetrization { kMean, kMinMax };

std::string to_string(Symmetrization s);
Symmetrization symmetrization_from_string(const std::string& name);

/// Lumped masses m_i = (1/(d+1)) sum of incident simplex volumes and the
/// partition-function estimate Z = sum_i m_i e^{-beta U_i}.
struct MassVector {
  Eigen::VectorXd mass;
  double z = 0.0;
  std::vector<Index> zero_mass;  ///< isolated points (m_i = 0)
};

/// d = 2: A_ij = sum over ring triangles containing edge ij of -1/2 w cot(angle opposite ij),
/// w the mean Gibbs weight of the triangle's vertices. d = 1: A_ij = -w_ij / |edge|.
/// Throws AssemblyError for zero-length edges or zero-area triangles.
RawStiffness assemble_raw(const Connectivity& conn, const GibbsField& gibbs);

StiffnessMatrix symmetrize_mean(const RawStiffness& raw);
StiffnessMatrix symmetrize_minmax(const RawStiffness& raw);
StiffnessMatrix symmetrize(const RawStiffness& raw, Symmetrization rule);

MassVector lumped_mass(const Connectivity& conn, const GibbsField& gibbs);

/// Coordinate-format dump `i j value` of a sparse matrix.
void save_matrix(const SparseMatrix& m, const std::string& path);

}  // namespace lmc
