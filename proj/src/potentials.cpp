#include "lmc/potentials.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace lmc {

namespace {

struct MuellerTerm {
  double a, b, c, d, x0, y0;
};

constexpr std::array<MuellerTerm, 4> kMueller{{
    {-1.0, 0.0, -10.0, -200.0, 1.0, 0.0},
    {-1.0, 0.0, -10.0, -100.0, 0.0, 0.5},
    {-6.5, 11.0, -6.5, -170.0, -0.5, 1.5},
    {0.7, 0.6, 0.7, 15.0, -1.0, 1.0},
}};

int intrinsic_dim_of(const PotentialSpec& spec) {
  switch (spec.kind) {
    case PotentialKind::kDoubleWell1d:
      return 1;
    case PotentialKind::kMueller:
    case PotentialKind::kRuggedMueller:
      return 2;
    case PotentialKind::kFlat:
      return spec.flat_dim;
  }
  return 1;
}

}  // namespace

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::kDoubleWell1d:
      return "double_well_1d";
    case PotentialKind::kMueller:
      return "mueller";
    case PotentialKind::kRuggedMueller:
      return "rugged_mueller";
    case PotentialKind::kFlat:
      return "flat";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "double_well_1d" || name == "double_well") return PotentialKind::kDoubleWell1d;
  if (name == "mueller") return PotentialKind::kMueller;
  if (name == "rugged_mueller") return PotentialKind::kRuggedMueller;
  if (name == "flat") return PotentialKind::kFlat;
  throw ConfigError("unknown potential kind '" + name + "'");
}

double mueller_value(double x, double y) {
  double u = 0.0;
  for (const auto& t : kMueller) {
    const double dx = x - t.x0;
    const double dy = y - t.y0;
    u += t.d * std::exp(t.a * dx * dx + t.b * dx * dy + t.c * dy * dy);
  }
  return u;
}

void mueller_gradient(double x, double y, double& gx, double& gy) {
  gx = 0.0;
  gy = 0.0;
  for (const auto& t : kMueller) {
    const double dx = x - t.x0;
    const double dy = y - t.y0;
    const double e = t.d * std::exp(t.a * dx * dx + t.b * dx * dy + t.c * dy * dy);
    gx += e * (2.0 * t.a * dx + t.b * dy);
    gy += e * (t.b * dx + 2.0 * t.c * dy);
  }
}

Potential::Potential(PotentialSpec spec) : spec_(spec) {
  if (spec_.kind == PotentialKind::kFlat && spec_.flat_dim < 1) throw ConfigError("flat potential needs dim >= 1");
  if (!(spec_.beta > 0.0)) throw ConfigError("beta must be positive");
  intrinsic_dim_ = intrinsic_dim_of(spec_);
  ambient_dim_ = spec_.ambient_dim == 0 ? intrinsic_dim_ : spec_.ambient_dim;
  if (ambient_dim_ < intrinsic_dim_) throw ConfigError("ambient dimension below the potential's dimension");
}

double Potential::temperature() const noexcept { return std::isinf(spec_.beta) ? 0.0 : 1.0 / spec_.beta; }

double Potential::base_value(std::span<const double> x) const {
  switch (spec_.kind) {
    case PotentialKind::kDoubleWell1d: {
      const double s = x[0] * x[0] - 1.0;
      return s * s;
    }
    case PotentialKind::kMueller:
      return mueller_value(x[0], x[1]);
    case PotentialKind::kRuggedMueller: {
      const double w = 2.0 * spec_.rugged_k * std::numbers::pi;
      return mueller_value(x[0], x[1]) + spec_.rugged_gamma * std::sin(w * x[0]) * std::sin(w * x[1]);
    }
    case PotentialKind::kFlat:
      return 0.0;
  }
  return 0.0;
}

double Potential::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) < intrinsic_dim_) throw InvalidParameter("point has too few coordinates");
  return base_value(x) + spec_.energy_shift;
}

void Potential::gradient(std::span<const double> x, std::span<double> grad) const {
  if (static_cast<int>(x.size()) < intrinsic_dim_ || grad.size() != x.size()) {
    throw InvalidParameter("gradient buffer does not match the point");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  switch (spec_.kind) {
    case PotentialKind::kDoubleWell1d:
      grad[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
      break;
    case PotentialKind::kMueller:
      mueller_gradient(x[0], x[1], grad[0], grad[1]);
      break;
    case PotentialKind::kRuggedMueller: {
      mueller_gradient(x[0], x[1], grad[0], grad[1]);
      const double w = 2.0 * spec_.rugged_k * std::numbers::pi;
      const double g = spec_.rugged_gamma * w;
      grad[0] += g * std::cos(w * x[0]) * std::sin(w * x[1]);
      grad[1] += g * std::sin(w * x[0]) * std::cos(w * x[1]);
      break;
    }
    case PotentialKind::kFlat:
      break;
  }
}

double Potential::region_energy(std::span<const double> x) const {
  if (spec_.kind == PotentialKind::kRuggedMueller) {
    if (x.size() < 2) throw InvalidParameter("point has too few coordinates");
    return mueller_value(x[0], x[1]) + spec_.energy_shift;
  }
  return value(x);
}

std::vector<double> Potential::energies(const PointCloud& cloud) const {
  std::vector<double> u(static_cast<std::size_t>(cloud.size()));
  for (Index i = 0; i < cloud.size(); ++i) u[static_cast<std::size_t>(i)] = value(cloud.point(i));
  return u;
}

double GibbsField::weight(Index i) const { return std::exp(-beta * energy[static_cast<std::size_t>(i)]); }

GibbsField gibbs_field(const Potential& potential, const PointCloud& cloud) {
  return {potential.energies(cloud), potential.beta()};
}

// ---------------------------------------------------------------------------
// Regions

namespace {

std::string strip(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

double parse_value(const std::string& text, const std::string& whole) {
  const std::string t = strip(text);
  double v = 0.0;
  const char* begin = t.data() + (!t.empty() && t.front() == '+' ? 1 : 0);
  const auto res = std::from_chars(begin, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError("bad number '" + t + "' in region '" + whole + "'");
  }
  return v;
}

int parse_variable(const std::string& name, const std::string& whole) {
  if (name == "U") return -1;
  if (name == "x") return 0;
  if (name == "y") return 1;
  if (name == "z") return 2;
  if (name.size() > 1 && name[0] == 'x' &&
      std::all_of(name.begin() + 1, name.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::stoi(name.substr(1));
  }
  throw ConfigError("unknown variable '" + name + "' in region '" + whole + "'");
}

}  // namespace

RegionSpec RegionSpec::parse(const std::string& text) {
  RegionSpec spec;
  spec.text_ = strip(text);
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto amp = text.find('&', start);
    const std::string part = strip(text.substr(start, amp == std::string::npos ? std::string::npos : amp - start));
    start = amp == std::string::npos ? text.size() + 1 : amp + 1;
    if (part.empty()) throw ConfigError("empty clause in region '" + text + "'");

    Clause clause;
    const auto in_pos = part.find(" in ");
    if (in_pos != std::string::npos) {
      clause.coordinate = parse_variable(strip(part.substr(0, in_pos)), text);
      const std::string range = strip(part.substr(in_pos + 4));
      const auto comma = range.find(',');
      if (range.size() < 5 || range.front() != '[' || range.back() != ']' || comma == std::string::npos) {
        throw ConfigError("bad interval '" + range + "' in region '" + text + "'");
      }
      clause.lo = parse_value(range.substr(1, comma - 1), text);
      clause.hi = parse_value(range.substr(comma + 1, range.size() - comma - 2), text);
      clause.has_lo = clause.has_hi = true;
      if (clause.lo > clause.hi) throw ConfigError("empty interval in region '" + text + "'");
    } else {
      const auto op = part.find_first_of("<>");
      if (op == std::string::npos) throw ConfigError("clause '" + part + "' has no comparison");
      const bool less = part[op] == '<';
      const bool inclusive = op + 1 < part.size() && part[op + 1] == '=';
      clause.coordinate = parse_variable(strip(part.substr(0, op)), text);
      const double v = parse_value(part.substr(op + (inclusive ? 2 : 1)), text);
      if (less) {
        clause.has_hi = true;
        clause.hi = v;
        clause.hi_strict = !inclusive;
      } else {
        clause.has_lo = true;
        clause.lo = v;
        clause.lo_strict = !inclusive;
      }
    }
    spec.clauses_.push_back(clause);
  }
  return spec;
}

bool RegionSpec::contains(const Potential& potential, std::span<const double> x) const {
  if (clauses_.empty()) return false;
  for (const Clause& c : clauses_) {
    double v = 0.0;
    if (c.coordinate < 0) {
      v = potential.region_energy(x);
    } else {
      if (static_cast<std::size_t>(c.coordinate) >= x.size()) {
        throw ConfigError("region '" + text_ + "' refers to a missing coordinate");
      }
      v = x[static_cast<std::size_t>(c.coordinate)];
    }
    if (c.has_lo && (c.lo_strict ? !(v > c.lo) : !(v >= c.lo))) return false;
    if (c.has_hi && (c.hi_strict ? !(v < c.hi) : !(v <= c.hi))) return false;
  }
  return true;
}

RegionLabels RegionLabels::from_labels(std::vector<Label> label) {
  RegionLabels out;
  out.label = std::move(label);
  for (Index i = 0; i < out.size(); ++i) {
    switch (out.label[static_cast<std::size_t>(i)]) {
      case Label::kReactant:
        out.a.push_back(i);
        break;
      case Label::kProduct:
        out.b.push_back(i);
        break;
      case Label::kFree:
        out.c.push_back(i);
        break;
    }
  }
  if (out.a.empty()) throw ConfigError("reactant set A contains no point");
  if (out.b.empty()) throw ConfigError("product set B contains no point");
  return out;
}

RegionLabels RegionLabels::swapped() const {
  RegionLabels out = *this;
  for (auto& l : out.label) {
    if (l == Label::kReactant) {
      l = Label::kProduct;
    } else if (l == Label::kProduct) {
      l = Label::kReactant;
    }
  }
  std::swap(out.a, out.b);
  return out;
}

RegionLabels classify_regions(const RegionSpec& a, const RegionSpec& b, const Potential& potential,
                              const PointCloud& cloud, const PointCloud* generating) {
  const PointCloud& eval = generating ? *generating : cloud;
  if (eval.size() != cloud.size()) throw InvalidParameter("generating cloud size differs from the cloud");
  std::vector<Label> label(static_cast<std::size_t>(cloud.size()), Label::kFree);
  for (Index i = 0; i < cloud.size(); ++i) {
    const auto x = eval.point(i);
    const bool in_a = a.contains(potential, x);
    const bool in_b = b.contains(potential, x);
    if (in_a && in_b) throw ConfigError("point " + std::to_string(i) + " lies in both A and B");
    if (in_a) label[static_cast<std::size_t>(i)] = Label::kReactant;
    if (in_b) label[static_cast<std::size_t>(i)] = Label::kProduct;
  }
  return RegionLabels::from_labels(std::move(label));
}

}  // namespace lmc
