#pragma once

#include "lmc/assembly.hpp"
#include "lmc/committor.hpp"
#include "lmc/diffusion_map.hpp"
#include "lmc/local_mesh.hpp"
#include "lmc/potentials.hpp"
#include "lmc/reactive_flow.hpp"
#include "lmc/reference.hpp"
#include "lmc/sampler.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lmc {

enum class SolverMethod { kLocalMesh, kDiffusionMap, kReference };

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& name);

/// One experiment, read from a flat `key = value` file with dotted keys.
/// Unset keys take defaults that depend on `potential.kind`.
struct ExperimentConfig {
  PotentialSpec potential;
  std::string region_a, region_b;

  SamplerConfig sampler;
  int noise_ambient_dim = 0;  ///< 0 = no embedding
  double noise_gamma = 0.0;

  MeshOptions mesh;
  Symmetrization symmetrization = Symmetrization::kMinMax;
  SolverMethod method = SolverMethod::kLocalMesh;
  DisconnectedPolicy disconnected = DisconnectedPolicy::kError;
  bool gradients = false;

  DmOptions dm;

  std::vector<double> reference_lo, reference_hi;
  std::vector<Index> reference_nodes;
  std::string reference_file;  ///< grid CSV, "auto" = compute from reference.*, empty = none

  std::string input_points;
  std::string input_generating;  ///< noise-free coordinates behind an embedded cloud
  std::string output_dir = ".";

  std::vector<double> trace_start;
  TraceOptions trace;

  std::vector<double> mc_x0;
  McOptions mc;

  int compare_repeats = 10;
  Index compare_grid = 201;

  std::optional<std::uint64_t> seed;

  /// Throws ConfigError when the seed is required but missing.
  std::uint64_t require_seed() const;

  /// Every key with its resolved value, formatted as it would be written to a file.
  std::map<std::string, std::string> resolved() const;
};

/// Parses `key = value` lines ('#' comments, blank lines ignored).
/// Throws ParseError with the line number for malformed lines.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Builds a config from raw key/value pairs. Throws ConfigError on unknown
/// keys or invalid values.
ExperimentConfig make_config(const std::map<std::string, std::string>& values);

/// All recognized keys in the order they are documented.
const std::vector<std::string>& config_keys();

}  // namespace lmc
