#pragma once

#include "lmc/point_cloud.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lmc {

enum class PotentialKind { kDoubleWell1d, kMueller, kRuggedMueller, kFlat };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

/// Full description of an energy landscape. When `ambient_dim` exceeds the
/// intrinsic dimension the potential is lifted: it reads the first intrinsic
/// coordinates and is constant in the padding ones.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::kDoubleWell1d;
  double beta = 1.0;           ///< inverse temperature; +inf means zero temperature
  double rugged_gamma = 9.0;   ///< ruggedness amplitude
  double rugged_k = 5.0;       ///< ruggedness frequency
  int flat_dim = 1;            ///< intrinsic dimension of the flat potential
  int ambient_dim = 0;         ///< 0 = intrinsic dimension
  double energy_shift = 0.0;   ///< constant added to U
};

class Potential {
 public:
  explicit Potential(PotentialSpec spec);

  const PotentialSpec& spec() const noexcept { return spec_; }
  double beta() const noexcept { return spec_.beta; }
  /// k_B T; zero at zero temperature.
  double temperature() const noexcept;
  int intrinsic_dim() const noexcept { return intrinsic_dim_; }
  int ambient_dim() const noexcept { return ambient_dim_; }

  double value(std::span<const double> x) const;
  /// Writes dU/dx into `grad` (same length as `x`).
  void gradient(std::span<const double> x, std::span<double> grad) const;

  /// Energy used by `U` in region predicates. For the rugged Mueller potential
  /// the reactant/product sets are defined on the smooth Mueller surface.
  double region_energy(std::span<const double> x) const;

  /// U at every point of the cloud.
  std::vector<double> energies(const PointCloud& cloud) const;

 private:
  double base_value(std::span<const double> x) const;

  PotentialSpec spec_;
  int intrinsic_dim_ = 1;
  int ambient_dim_ = 1;
};

/// The smooth four-well Mueller surface (no shift, no ruggedness).
double mueller_value(double x, double y);
void mueller_gradient(double x, double y, double& gx, double& gy);

/// Per-point energies together with beta, i.e. what the discretizations need
/// to form Gibbs weights e^{-beta U}.
struct GibbsField {
  std::vector<double> energy;
  double beta = 1.0;

  double weight(Index i) const;
  Index size() const noexcept { return static_cast<Index>(energy.size()); }
};

GibbsField gibbs_field(const Potential& potential, const PointCloud& cloud);

// ---------------------------------------------------------------------------
// Regions

/// Conjunction of clauses over a configuration point, parsed from text such as
/// `U<-120 & y>0.75` or `x in [-1,-0.9]`. Coordinates are named x, y or x0, x1, ...
class RegionSpec {
 public:
  RegionSpec() = default;
  static RegionSpec parse(const std::string& text);

  bool contains(const Potential& potential, std::span<const double> x) const;
  const std::string& text() const noexcept { return text_; }
  bool empty() const noexcept { return clauses_.empty(); }

 private:
  struct Clause {
    int coordinate = -1;  // -1 for the energy
    double lo = 0.0, hi = 0.0;
    bool lo_strict = false, hi_strict = false;
    bool has_lo = false, has_hi = false;
  };
  std::vector<Clause> clauses_;
  std::string text_;
};

enum class Label : std::uint8_t { kFree = 0, kReactant = 1, kProduct = 2 };

/// Partition of point indices into reactant A, product B and free C.
struct RegionLabels {
  std::vector<Label> label;
  std::vector<Index> a, b, c;

  Index size() const noexcept { return static_cast<Index>(label.size()); }
  /// Builds the index lists from `label`; throws ConfigError if A or B is empty.
  static RegionLabels from_labels(std::vector<Label> label);
  RegionLabels swapped() const;
};

/// Labels each point of `cloud`. When `generating` is given (same number of
/// points) the predicates are evaluated on it instead, e.g. the noise-free
/// coordinates behind a noisy embedding. Only the potential's intrinsic
/// coordinates are consulted.
RegionLabels classify_regions(const RegionSpec& a, const RegionSpec& b, const Potential& potential,
                              const PointCloud& cloud, const PointCloud* generating = nullptr);

}  // namespace lmc
