#include "lmc/assembly.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace lmc {

std::string to_string(Symmetrization s) { return s == Symmetrization::kMean ? "mean" : "minmax"; }

Symmetrization symmetrization_from_string(const std::string& name) {
  if (name == "mean") return Symmetrization::kMean;
  if (name == "minmax") return Symmetrization::kMinMax;
  throw ConfigError("unknown symmetrization '" + name + "' (expected mean or minmax)");
}

double StiffnessMatrix::quadratic_form(const Eigen::VectorXd& q) const { return q.dot(s_ * q); }

RawStiffness assemble_raw(const Connectivity& conn, const GibbsField& gibbs) {
  const Index n = conn.size();
  if (gibbs.size() != n) throw InvalidParameter("Gibbs field and connectivity differ in size");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = gibbs.weight(i);

  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 12);
  for (const FirstRing& ring : conn.rings) {
    const Index i = ring.center;
    const double wi = w[static_cast<std::size_t>(i)];
    for (const auto& s : ring.simplices) {
      if (ring.dim == 1) {
        const Index j = ring.vertex_id(s[1]);
        const double len = std::abs(ring.coords(s[1], 0));
        if (!(len > 0.0)) throw AssemblyError("zero-length ring edge", i);
        const double wij = (wi + w[static_cast<std::size_t>(j)]) / 2.0;
        trips.emplace_back(i, j, -wij / len);
        continue;
      }
      const Index ja = ring.vertex_id(s[1]);
      const Index jb = ring.vertex_id(s[2]);
      const Eigen::Vector2d pa = ring.coords.row(s[1]).transpose();
      const Eigen::Vector2d pb = ring.coords.row(s[2]).transpose();
      const double cross2 = std::abs(pa.x() * pb.y() - pa.y() * pb.x());
      if (!(cross2 > 0.0)) throw AssemblyError("zero-area ring triangle", i);
      const double wf = (wi + w[static_cast<std::size_t>(ja)] + w[static_cast<std::size_t>(jb)]) / 3.0;
      // Edge (i, ja) is opposite the angle at b; edge (i, jb) opposite the angle at a.
      const double cot_b = (-pb).dot(pa - pb) / cross2;
      const double cot_a = (-pa).dot(pb - pa) / cross2;
      trips.emplace_back(i, ja, -0.5 * wf * cot_b);
      trips.emplace_back(i, jb, -0.5 * wf * cot_a);
    }
  }
  RawStiffness raw;
  raw.a.resize(n, n);
  raw.a.setFromTriplets(trips.begin(), trips.end());
  return raw;
}

namespace {

template <typename Rule>
StiffnessMatrix symmetrize_with(const RawStiffness& raw, Rule rule) {
  const SparseMatrix& a = raw.a;
  const SparseMatrix at = a.transpose();
  const Index n = a.rows();

  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * 2 + n));
  std::vector<std::pair<Index, double>> row;
  for (Index i = 0; i < n; ++i) {
    row.clear();
    SparseMatrix::InnerIterator it_ij(a, i);
    SparseMatrix::InnerIterator it_ji(at, i);
    // Merge the sorted column lists of A(i,:) and A(:,i).
    while (it_ij || it_ji) {
      Index j = 0;
      double aij = 0.0, aji = 0.0;
      if (it_ij && (!it_ji || it_ij.col() <= it_ji.col())) {
        j = it_ij.col();
        aij = it_ij.value();
        if (it_ji && it_ji.col() == j) {
          aji = it_ji.value();
          ++it_ji;
        }
        ++it_ij;
      } else {
        j = it_ji.col();
        aji = it_ji.value();
        ++it_ji;
      }
      if (j == i) continue;
      const double s = rule(aij, aji);
      if (s != 0.0) row.emplace_back(j, s);
    }
    double diag = 0.0;
    for (const auto& [j, s] : row) diag -= s;
    for (const auto& [j, s] : row) trips.emplace_back(i, j, s);
    trips.emplace_back(i, i, diag);
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  return StiffnessMatrix(std::move(s));
}

}  // namespace

StiffnessMatrix symmetrize_mean(const RawStiffness& raw) {
  return symmetrize_with(raw, [](double aij, double aji) { return 0.5 * (aij + aji); });
}

StiffnessMatrix symmetrize_minmax(const RawStiffness& raw) {
  return symmetrize_with(raw, [](double aij, double aji) {
    if (aij <= 0.0 && aji <= 0.0) return std::max(aij, aji);
    return std::min(aij, aji);
  });
}

StiffnessMatrix symmetrize(const RawStiffness& raw, Symmetrization rule) {
  return rule == Symmetrization::kMean ? symmetrize_mean(raw) : symmetrize_minmax(raw);
}

MassVector lumped_mass(const Connectivity& conn, const GibbsField& gibbs) {
  const Index n = conn.size();
  if (gibbs.size() != n) throw InvalidParameter("Gibbs field and connectivity differ in size");
  MassVector out;
  out.mass = Eigen::VectorXd::Zero(n);
  for (const FirstRing& ring : conn.rings) {
    double vol = 0.0;
    for (const auto& s : ring.simplices) {
      if (ring.dim == 1) {
        vol += std::abs(ring.coords(s[1], 0));
      } else {
        const double ax = ring.coords(s[1], 0), ay = ring.coords(s[1], 1);
        const double bx = ring.coords(s[2], 0), by = ring.coords(s[2], 1);
        vol += 0.5 * std::abs(ax * by - ay * bx);
      }
    }
    out.mass(ring.center) = vol / (ring.dim + 1);
  }
  for (Index i = 0; i < n; ++i) {
    if (out.mass(i) > 0.0) {
      out.z += out.mass(i) * gibbs.weight(i);
    } else {
      out.zero_mass.push_back(i);
    }
  }
  return out;
}

void save_matrix(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  char buf[64];
  for (Index i = 0; i < m.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%.17g", it.value());
      out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
    }
  }
}

}  // namespace lmc
