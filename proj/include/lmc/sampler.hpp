#pragma once

#include "lmc/point_cloud.hpp"
#include "lmc/potentials.hpp"

#include <cstdint>
#include <vector>

namespace lmc {

/// Euler–Maruyama settings. Snapshot m is the state after
/// burn_in + (m + 1) * stride steps; snapshots outside [box_lo, box_hi] are
/// discarded while the simulation continues.
struct SamplerConfig {
  double dt = 1e-4;
  Index n_snapshots = 1000;
  Index stride = 1;
  Index burn_in = 0;
  std::vector<double> x0;
  std::vector<double> box_lo;  ///< empty = no keep-filter
  std::vector<double> box_hi;
  std::uint64_t seed = 0;
};

struct SampleResult {
  PointCloud cloud;
  Index kept = 0;
  Index discarded = 0;   ///< snapshots outside the box
  Index duplicates = 0;  ///< kept snapshots dropped by the dedup rule
};

/// Runs X_{m+1} = X_m - grad U(X_m) dt + sqrt(2 dt / beta) xi_m and records snapshots.
/// Throws NumericalError on a non-finite state (naming the step) or when no
/// snapshot survives the keep-filter.
SampleResult sample_trajectory(const Potential& potential, const SamplerConfig& config);

}  // namespace lmc
