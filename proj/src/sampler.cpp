#include "lmc/sampler.hpp"

#include "lmc/errors.hpp"

#include <cmath>
#include <random>

namespace lmc {

SampleResult sample_trajectory(const Potential& potential, const SamplerConfig& config) {
  const int dim = potential.ambient_dim();
  if (!(config.dt > 0.0)) throw ConfigError("sampler dt must be positive");
  if (config.stride < 1) throw ConfigError("sampler stride must be >= 1");
  if (config.n_snapshots < 1) throw ConfigError("sampler needs at least one snapshot");
  if (config.burn_in < 0) throw ConfigError("sampler burn-in must be >= 0");
  if (static_cast<int>(config.x0.size()) != dim) {
    throw ConfigError("sampler x0 has " + std::to_string(config.x0.size()) + " coordinates, expected " +
                      std::to_string(dim));
  }
  const bool filter = !config.box_lo.empty();
  if (filter && (static_cast<int>(config.box_lo.size()) != dim || static_cast<int>(config.box_hi.size()) != dim)) {
    throw ConfigError("sampler box does not match the dimension");
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double noise = std::sqrt(2.0 * potential.temperature() * config.dt);

  std::vector<double> x = config.x0;
  std::vector<double> grad(static_cast<std::size_t>(dim));
  RowMatrix kept(config.n_snapshots, dim);
  Index n_kept = 0;
  SampleResult result;

  const Index total = config.burn_in + config.n_snapshots * config.stride;
  for (Index step = 1; step <= total; ++step) {
    potential.gradient(x, grad);
    for (int a = 0; a < dim; ++a) {
      x[static_cast<std::size_t>(a)] += -grad[static_cast<std::size_t>(a)] * config.dt + noise * normal(rng);
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw NumericalError("sampler blew up at step " + std::to_string(step));
    }
    if (step <= config.burn_in || (step - config.burn_in) % config.stride != 0) continue;

    bool inside = true;
    for (int a = 0; filter && a < dim; ++a) {
      const double v = x[static_cast<std::size_t>(a)];
      inside = inside && v >= config.box_lo[static_cast<std::size_t>(a)] && v <= config.box_hi[static_cast<std::size_t>(a)];
    }
    if (!inside) {
      ++result.discarded;
      continue;
    }
    for (int a = 0; a < dim; ++a) kept(n_kept, a) = x[static_cast<std::size_t>(a)];
    ++n_kept;
  }
  if (n_kept == 0) throw NumericalError("no snapshot fell inside the keep-filter box");
  kept.conservativeResize(n_kept, dim);

  result.cloud = PointCloud(deduplicate(kept, &result.duplicates));
  result.kept = result.cloud.size();
  return result;
}

}  // namespace lmc
