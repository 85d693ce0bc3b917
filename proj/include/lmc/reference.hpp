#pragma once

#include "lmc/assembly.hpp"
#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmc {

/// Nodal values on a regular 1D or 2D grid. Node (ix, iy) has flat index ix * ny + iy.
struct GridField {
  int dim = 1;
  std::vector<double> lo, hi;
  std::vector<Index> nodes;  ///< nodes per axis
  Eigen::VectorXd values;
  double nu_r = std::numeric_limits<double>::quiet_NaN();
  double z = std::numeric_limits<double>::quiet_NaN();

  double spacing(int axis) const;
  double coordinate(int axis, Index k) const;
  Index size() const noexcept { return values.size(); }

  /// Linear (1D) or bilinear (2D) interpolation at the first `dim` coordinates of x.
  /// Points outside the grid are clamped onto it; `clamped` reports that.
  double interpolate(std::span<const double> x, bool* clamped = nullptr) const;
};

/// CSV with `# key=value` metadata lines (dim, lo, hi, nodes, nu_r, z); `extra`
/// lines are written as further comments and ignored when loading.
void save_grid_field(const GridField& field, const std::string& path, const std::vector<std::string>& extra = {});
GridField load_grid_field(const std::string& path);

/// Uniform nodes of [lo, hi].
PointCloud uniform_grid_1d(double lo, double hi, Index n_nodes);

/// 1D linear finite elements with element weight = mean endpoint e^{-beta U}.
/// `nodes` must be strictly increasing. Returns the same kind of stiffness
/// matrix the point-cloud discretization produces.
StiffnessMatrix fem_stiffness_1d(const Eigen::VectorXd& nodes, const std::vector<double>& energy, double beta);

/// Committor on n_nodes uniform nodes of [lo, hi] with q = 0 on A-nodes, q = 1 on B-nodes.
GridField fem_solve_1d(const Potential& potential, double lo, double hi, Index n_nodes, const RegionSpec& a,
                       const RegionSpec& b);

/// q(x) = int_a^x e^{beta U} / int_a^b e^{beta U}, adaptive Gauss–Kronrod at 1e-10 relative tolerance.
double closed_form_1d(const Potential& potential, double a, double b, double x);

/// Gibbs-weighted linear elements on a regular grid split into two right
/// triangles per cell; Dirichlet on A/B nodes, natural Neumann on the box
/// boundary. Also returns nu_R = (1/beta) q^T S q / Z with lumped-mass Z.
GridField grid_solve_2d(const Potential& potential, const std::vector<double>& lo, const std::vector<double>& hi,
                        Index nx, Index ny, const RegionSpec& a, const RegionSpec& b);

struct McOptions {
  Index n_paths = 1000;
  double dt = 1e-4;
  std::uint64_t seed = 0;
  Index max_steps = 100'000'000;
};

struct McResult {
  double estimate = 0.0;
  double std_error = 0.0;
  Index hits_b = 0;
  Index used = 0;
  Index censored = 0;
  std::optional<std::string> warning;
};

/// Fraction of Euler–Maruyama paths from x0 that enter B before A.
/// Censored paths (step cap reached) are excluded and counted.
McResult mc_committor(const Potential& potential, const std::vector<double>& x0, const RegionSpec& a,
                      const RegionSpec& b, const McOptions& options);

}  // namespace lmc
