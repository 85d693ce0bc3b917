#include "lmc/reference.hpp"

#include "lmc/errors.hpp"

#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace lmc {

double GridField::spacing(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return (hi[a] - lo[a]) / static_cast<double>(nodes[a] - 1);
}

namespace {

// Node k of n on [lo, hi]. Hits both endpoints exactly and is mirror
// symmetric on symmetric intervals.
double node(double lo, double hi, Index k, Index n) {
  const auto m = static_cast<double>(n - 1);
  const auto kk = static_cast<double>(k);
  return ((m - kk) * lo + kk * hi) / m;
}

}  // namespace

double GridField::coordinate(int axis, Index k) const {
  const auto a = static_cast<std::size_t>(axis);
  return node(lo[a], hi[a], k, nodes[a]);
}

namespace {

// Cell index and local coordinate in [0, 1] along one axis, clamped to the grid.
std::pair<Index, double> locate(const GridField& f, int axis, double x, bool& clamped) {
  const auto a = static_cast<std::size_t>(axis);
  double t = (x - f.lo[a]) / f.spacing(axis);
  const double t_max = static_cast<double>(f.nodes[a] - 1);
  if (t < 0.0 || t > t_max) {
    clamped = true;
    t = std::clamp(t, 0.0, t_max);
  }
  const Index k = std::min<Index>(static_cast<Index>(std::floor(t)), f.nodes[a] - 2);
  return {k, t - static_cast<double>(k)};
}

}  // namespace

double GridField::interpolate(std::span<const double> x, bool* clamped) const {
  if (static_cast<int>(x.size()) < dim) throw InvalidParameter("point has fewer coordinates than the grid");
  bool out = false;
  double v = 0.0;
  if (dim == 1) {
    const auto [k, s] = locate(*this, 0, x[0], out);
    v = (1.0 - s) * values(k) + s * values(k + 1);
  } else {
    const auto [ix, sx] = locate(*this, 0, x[0], out);
    const auto [iy, sy] = locate(*this, 1, x[1], out);
    const Index ny = nodes[1];
    const double v00 = values(ix * ny + iy), v01 = values(ix * ny + iy + 1);
    const double v10 = values((ix + 1) * ny + iy), v11 = values((ix + 1) * ny + iy + 1);
    v = (1.0 - sx) * ((1.0 - sy) * v00 + sy * v01) + sx * ((1.0 - sy) * v10 + sy * v11);
  }
  if (clamped) *clamped = out;
  return v;
}

void save_grid_field(const GridField& field, const std::string& path, const std::vector<std::string>& extra) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path + "'");
  const auto join = [](const auto& xs) {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(xs[k])>>) {
        s += (k ? "," : "") + format_double(xs[k]);
      } else {
        s += (k ? "," : "") + std::to_string(xs[k]);
      }
    }
    return s;
  };
  out << "# dim=" << field.dim << '\n';
  out << "# lo=" << join(field.lo) << '\n';
  out << "# hi=" << join(field.hi) << '\n';
  out << "# nodes=" << join(field.nodes) << '\n';
  out << "# nu_r=" << format_double(field.nu_r) << '\n';
  out << "# z=" << format_double(field.z) << '\n';
  for (const std::string& line : extra) out << "# " << line << '\n';
  for (int a = 0; a < field.dim; ++a) out << 'x' << a << ',';
  out << "q\n";
  const Index ny = field.dim == 2 ? field.nodes[1] : 1;
  for (Index k = 0; k < field.size(); ++k) {
    if (field.dim == 1) {
      out << format_double(field.coordinate(0, k));
    } else {
      out << format_double(field.coordinate(0, k / ny)) << ',' << format_double(field.coordinate(1, k % ny));
    }
    out << ',' << format_double(field.values(k)) << '\n';
  }
}

GridField load_grid_field(const std::string& path) {
  const CsvTable table = read_csv_table(path);
  GridField f;
  const auto parse_list = [&](const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        if (item == "nan" || item == "-nan") {
          v.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          throw ParseError("bad grid metadata '" + text + "' in '" + path + "'", 0);
        }
      }
    }
    return v;
  };
  bool have_dim = false, have_nodes = false;
  for (const std::string& c : table.comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = c.substr(0, eq);
    if (key != "dim" && key != "lo" && key != "hi" && key != "nodes" && key != "nu_r" && key != "z") continue;
    const auto vals = parse_list(c.substr(eq + 1));
    if (key == "dim" && !vals.empty()) {
      f.dim = static_cast<int>(vals[0]);
      have_dim = true;
    } else if (key == "lo") {
      f.lo = vals;
    } else if (key == "hi") {
      f.hi = vals;
    } else if (key == "nodes") {
      for (double v : vals) f.nodes.push_back(static_cast<Index>(v));
      have_nodes = true;
    } else if (key == "nu_r" && !vals.empty()) {
      f.nu_r = vals[0];
    } else if (key == "z" && !vals.empty()) {
      f.z = vals[0];
    }
  }
  if (!have_dim || !have_nodes || (f.dim != 1 && f.dim != 2) || static_cast<int>(f.lo.size()) != f.dim ||
      static_cast<int>(f.hi.size()) != f.dim || static_cast<int>(f.nodes.size()) != f.dim) {
    throw ParseError("incomplete grid metadata in '" + path + "'", 0);
  }
  Index expected = 1;
  for (Index n : f.nodes) expected *= n;
  if (table.values.rows() != expected || table.values.cols() != f.dim + 1) {
    throw ParseError("grid '" + path + "' has the wrong number of rows or columns", 0);
  }
  f.values = table.values.col(f.dim);
  return f;
}

PointCloud uniform_grid_1d(double lo, double hi, Index n_nodes) {
  if (n_nodes < 2 || !(hi > lo)) throw InvalidParameter("uniform grid needs n >= 2 and hi > lo");
  RowMatrix pts(n_nodes, 1);
  for (Index k = 0; k < n_nodes; ++k) pts(k, 0) = node(lo, hi, k, n_nodes);
  return PointCloud(std::move(pts));
}

namespace {

// Sorted off-diagonal triplets -> zero-row-sum symmetric matrix.
StiffnessMatrix from_edges(Index n, const std::vector<std::vector<std::pair<Index, double>>>& rows) {
  std::vector<Eigen::Triplet<double, Index>> trips;
  for (Index i = 0; i < n; ++i) {
    auto row = rows[static_cast<std::size_t>(i)];
    std::sort(row.begin(), row.end());
    double diag = 0.0;
    for (const auto& [j, s] : row) diag -= s;
    for (const auto& [j, s] : row) trips.emplace_back(i, j, s);
    trips.emplace_back(i, i, diag);
  }
  SparseMatrix s(n, n);
  s.setFromTriplets(trips.begin(), trips.end());
  return StiffnessMatrix(std::move(s));
}

// q = 0 on A, 1 on B, S(C,C) q_C = -S(C,B) 1 by sparse Cholesky.
Eigen::VectorXd dirichlet_solve(const SparseMatrix& s, const std::vector<Label>& label) {
  const Index n = s.rows();
  std::vector<Index> slot(static_cast<std::size_t>(n), -1);
  Index m = 0;
  for (Index i = 0; i < n; ++i) {
    if (label[static_cast<std::size_t>(i)] == Label::kFree) slot[static_cast<std::size_t>(i)] = m++;
  }
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (Index i = 0; i < n; ++i) {
    if (label[static_cast<std::size_t>(i)] == Label::kProduct) q(i) = 1.0;
  }
  if (m == 0) return q;

  std::vector<Eigen::Triplet<double, Index>> trips;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Index i = 0; i < n; ++i) {
    const Index si = slot[static_cast<std::size_t>(i)];
    if (si < 0) continue;
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
      const Index sj = slot[static_cast<std::size_t>(it.col())];
      if (sj >= 0) {
        trips.emplace_back(si, sj, it.value());
      } else if (label[static_cast<std::size_t>(it.col())] == Label::kProduct) {
        rhs(si) -= it.value();
      }
    }
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, Index> scc(m, m);
  scc.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double, Eigen::ColMajor, Index>> ldlt(scc);
  if (ldlt.info() != Eigen::Success) throw NumericalError("reference system factorization failed");
  const Eigen::VectorXd qc = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !qc.allFinite()) throw NumericalError("reference solve failed");
  for (Index i = 0; i < n; ++i) {
    const Index si = slot[static_cast<std::size_t>(i)];
    if (si >= 0) q(i) = qc(si);
  }
  return q;
}

std::vector<Label> label_nodes(const Potential& potential, const PointCloud& nodes, const RegionSpec& a,
                               const RegionSpec& b) {
  std::vector<Label> label(static_cast<std::size_t>(nodes.size()), Label::kFree);
  std::vector<double> x(static_cast<std::size_t>(potential.ambient_dim()), 0.0);
  bool any_a = false, any_b = false;
  for (Index i = 0; i < nodes.size(); ++i) {
    std::copy_n(nodes.point(i).begin(), nodes.ambient_dim(), x.begin());
    const bool in_a = a.contains(potential, x);
    const bool in_b = b.contains(potential, x);
    if (in_a && in_b) throw ConfigError("grid node " + std::to_string(i) + " lies in both A and B");
    if (in_a) label[static_cast<std::size_t>(i)] = Label::kReactant;
    if (in_b) label[static_cast<std::size_t>(i)] = Label::kProduct;
    any_a = any_a || in_a;
    any_b = any_b || in_b;
  }
  if (!any_a) throw ConfigError("reactant set A captures no grid node");
  if (!any_b) throw ConfigError("product set B captures no grid node");
  return label;
}

std::vector<double> node_energies(const Potential& potential, const PointCloud& nodes) {
  std::vector<double> u(static_cast<std::size_t>(nodes.size()));
  std::vector<double> x(static_cast<std::size_t>(potential.ambient_dim()), 0.0);
  for (Index i = 0; i < nodes.size(); ++i) {
    std::copy_n(nodes.point(i).begin(), nodes.ambient_dim(), x.begin());
    u[static_cast<std::size_t>(i)] = potential.value(x);
  }
  return u;
}

}  // namespace

StiffnessMatrix fem_stiffness_1d(const Eigen::VectorXd& nodes, const std::vector<double>& energy, double beta) {
  const Index n = nodes.size();
  if (static_cast<Index>(energy.size()) != n) throw InvalidParameter("energy and nodes differ in size");
  std::vector<std::vector<std::pair<Index, double>>> rows(static_cast<std::size_t>(n));
  for (Index e = 0; e + 1 < n; ++e) {
    const double h = nodes(e + 1) - nodes(e);
    if (!(h > 0.0)) throw InvalidParameter("FE nodes must be strictly increasing");
    const double w = (std::exp(-beta * energy[static_cast<std::size_t>(e)]) +
                      std::exp(-beta * energy[static_cast<std::size_t>(e + 1)])) /
                     2.0;
    rows[static_cast<std::size_t>(e)].emplace_back(e + 1, -w / h);
    rows[static_cast<std::size_t>(e + 1)].emplace_back(e, -w / h);
  }
  return from_edges(n, rows);
}

GridField fem_solve_1d(const Potential& potential, double lo, double hi, Index n_nodes, const RegionSpec& a,
                       const RegionSpec& b) {
  if (n_nodes < 3) throw InvalidParameter("1D reference needs at least 3 nodes");
  if (potential.intrinsic_dim() != 1) throw InvalidParameter("1D reference needs a one-dimensional potential");
  const PointCloud nodes = uniform_grid_1d(lo, hi, n_nodes);
  const auto label = label_nodes(potential, nodes, a, b);
  const auto energy = node_energies(potential, nodes);
  const StiffnessMatrix s = fem_stiffness_1d(nodes.points().col(0), energy, potential.beta());

  GridField f;
  f.dim = 1;
  f.lo = {lo};
  f.hi = {hi};
  f.nodes = {n_nodes};
  f.values = dirichlet_solve(s.matrix(), label);

  // Lumped mass: half of each adjacent element.
  double z = 0.0;
  for (Index k = 0; k < n_nodes; ++k) {
    double m = 0.0;
    if (k > 0) m += 0.5 * (nodes.points()(k, 0) - nodes.points()(k - 1, 0));
    if (k + 1 < n_nodes) m += 0.5 * (nodes.points()(k + 1, 0) - nodes.points()(k, 0));
    z += m * std::exp(-potential.beta() * energy[static_cast<std::size_t>(k)]);
  }
  f.z = z;
  f.nu_r = s.quadratic_form(f.values) / potential.beta() / z;
  return f;
}

double closed_form_1d(const Potential& potential, double a, double b, double x) {
  if (!(a < b) || x < a || x > b) throw InvalidParameter("closed form needs a < b and x in [a, b]");
  std::vector<double> pt(static_cast<std::size_t>(potential.ambient_dim()), 0.0);
  const auto integrand = [&](double s) {
    pt[0] = s;
    return std::exp(potential.beta() * potential.value(pt));
  };
  constexpr double kTol = 1e-10;
  const auto integrate = [&](double from, double to) {
    if (from == to) return 0.0;
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, from, to, 20, kTol, &err);
    if (!(err <= kTol * std::abs(v) * 10.0) || !std::isfinite(v)) {
      throw NumericalError("closed-form quadrature did not converge");
    }
    return v;
  };
  const double total = integrate(a, b);
  return integrate(a, x) / total;
}

GridField grid_solve_2d(const Potential& potential, const std::vector<double>& lo, const std::vector<double>& hi,
                        Index nx, Index ny, const RegionSpec& a, const RegionSpec& b) {
  if (nx < 16 || ny < 16) throw InvalidParameter("2D reference needs at least 16 nodes per axis");
  if (lo.size() != 2 || hi.size() != 2 || !(hi[0] > lo[0]) || !(hi[1] > lo[1])) {
    throw InvalidParameter("2D reference needs a non-empty box");
  }
  if (potential.intrinsic_dim() != 2) throw InvalidParameter("2D reference needs a two-dimensional potential");

  GridField f;
  f.dim = 2;
  f.lo = lo;
  f.hi = hi;
  f.nodes = {nx, ny};
  const double hx = f.spacing(0), hy = f.spacing(1);

  RowMatrix pts(nx * ny, 2);
  for (Index ix = 0; ix < nx; ++ix) {
    for (Index iy = 0; iy < ny; ++iy) {
      pts(ix * ny + iy, 0) = f.coordinate(0, ix);
      pts(ix * ny + iy, 1) = f.coordinate(1, iy);
    }
  }
  const PointCloud nodes(std::move(pts));
  const auto label = label_nodes(potential, nodes, a, b);
  const auto energy = node_energies(potential, nodes);
  std::vector<double> w(energy.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(-potential.beta() * energy[k]);

  // Right triangles (v00, v10, v01) and (v11, v01, v10): only the two legs
  // carry a cotangent weight, hy/hx along x and hx/hy along y.
  std::vector<std::vector<std::pair<Index, double>>> rows(static_cast<std::size_t>(nx * ny));
  std::vector<double> coeff(static_cast<std::size_t>(nx * ny) * 4, 0.0);  // +x, +y, -x, -y neighbor weights
  const auto add_edge = [&](Index u, Index v, double k, bool along_x) {
    const Index lo_node = std::min(u, v);
    const Index hi_node = std::max(u, v);
    coeff[static_cast<std::size_t>(lo_node) * 4 + (along_x ? 0 : 1)] += k;
    coeff[static_cast<std::size_t>(hi_node) * 4 + (along_x ? 2 : 3)] += k;
  };
  const double tri_area = 0.5 * hx * hy;
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(nx * ny);
  for (Index ix = 0; ix + 1 < nx; ++ix) {
    for (Index iy = 0; iy + 1 < ny; ++iy) {
      const Index v00 = ix * ny + iy, v01 = v00 + 1, v10 = v00 + ny, v11 = v10 + 1;
      const double w1 = (w[static_cast<std::size_t>(v00)] + w[static_cast<std::size_t>(v10)] +
                         w[static_cast<std::size_t>(v01)]) / 3.0;
      const double w2 = (w[static_cast<std::size_t>(v11)] + w[static_cast<std::size_t>(v01)] +
                         w[static_cast<std::size_t>(v10)]) / 3.0;
      add_edge(v00, v10, 0.5 * w1 * hy / hx, true);
      add_edge(v00, v01, 0.5 * w1 * hx / hy, false);
      add_edge(v01, v11, 0.5 * w2 * hy / hx, true);
      add_edge(v10, v11, 0.5 * w2 * hx / hy, false);
      for (Index v : {v00, v10, v01}) mass(v) += tri_area / 3.0;
      for (Index v : {v11, v01, v10}) mass(v) += tri_area / 3.0;
    }
  }
  for (Index ix = 0; ix < nx; ++ix) {
    for (Index iy = 0; iy < ny; ++iy) {
      const Index v = ix * ny + iy;
      auto& row = rows[static_cast<std::size_t>(v)];
      const double* c = &coeff[static_cast<std::size_t>(v) * 4];
      if (ix + 1 < nx) row.emplace_back(v + ny, -c[0]);
      if (iy + 1 < ny) row.emplace_back(v + 1, -c[1]);
      if (ix > 0) row.emplace_back(v - ny, -c[2]);
      if (iy > 0) row.emplace_back(v - 1, -c[3]);
    }
  }
  const StiffnessMatrix s = from_edges(nx * ny, rows);
  f.values = dirichlet_solve(s.matrix(), label);

  double z = 0.0;
  for (Index v = 0; v < nx * ny; ++v) z += mass(v) * w[static_cast<std::size_t>(v)];
  f.z = z;
  f.nu_r = s.quadratic_form(f.values) / potential.beta() / z;
  return f;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

McResult mc_committor(const Potential& potential, const std::vector<double>& x0, const RegionSpec& a,
                      const RegionSpec& b, const McOptions& options) {
  if (static_cast<int>(x0.size()) != potential.ambient_dim()) throw InvalidParameter("x0 has the wrong dimension");
  if (a.contains(potential, x0) || b.contains(potential, x0)) throw InvalidParameter("x0 must lie outside A and B");
  if (options.n_paths < 1 || !(options.dt > 0.0) || options.max_steps < 1) {
    throw InvalidParameter("Monte Carlo needs n_paths >= 1, dt > 0 and a positive step cap");
  }

  const double noise = std::sqrt(2.0 * potential.temperature() * options.dt);
  // 0 = hit A, 1 = hit B, 2 = censored
  std::vector<int> outcome(static_cast<std::size_t>(options.n_paths), 2);

#pragma omp parallel for schedule(dynamic, 8)
  for (Index p = 0; p < options.n_paths; ++p) {
    std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(static_cast<std::uint64_t>(p))));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x = x0;
    std::vector<double> grad(x0.size());
    for (Index step = 0; step < options.max_steps; ++step) {
      potential.gradient(x, grad);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += -grad[k] * options.dt + noise * normal(rng);
      if (b.contains(potential, x)) {
        outcome[static_cast<std::size_t>(p)] = 1;
        break;
      }
      if (a.contains(potential, x)) {
        outcome[static_cast<std::size_t>(p)] = 0;
        break;
      }
    }
  }

  McResult r;
  for (int o : outcome) {
    if (o == 2) {
      ++r.censored;
    } else {
      ++r.used;
      r.hits_b += o;
    }
  }
  if (r.used > 0) {
    r.estimate = static_cast<double>(r.hits_b) / static_cast<double>(r.used);
    r.std_error = std::sqrt(r.estimate * (1.0 - r.estimate) / static_cast<double>(r.used));
  }
  if (r.censored * 100 > options.n_paths) {
    r.warning = std::to_string(r.censored) + " of " + std::to_string(options.n_paths) + " paths were censored";
  }
  return r;
}

}  // namespace lmc
