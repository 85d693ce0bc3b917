#include "lmc/committor.hpp"

#include "lmc/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <Eigen/Dense>

#include <cmath>
#include <algorithm>
#include <deque>
#include <limits>

namespace lmc {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

struct Restricted {
  std::vector<Index> interior;
  std::vector<Index> slot;  // point -> interior position, -1 on A/B
  ColMatrix cc;
  Eigen::VectorXd rhs;      // -S(C,B) 1
};

Restricted restrict_interior(const SparseMatrix& s, const RegionLabels& labels, const std::vector<Index>& interior) {
  const Index n = s.rows();
  Restricted r;
  r.interior = interior;
  r.slot.assign(static_cast<std::size_t>(n), -1);
  Index m = 0;
  for (Index i : interior) r.slot[static_cast<std::size_t>(i)] = m++;
  r.rhs = Eigen::VectorXd::Zero(m);
  std::vector<Eigen::Triplet<double, Index>> trips;
  trips.reserve(static_cast<std::size_t>(s.nonZeros()));
  for (Index i : interior) {
    const Index si = r.slot[static_cast<std::size_t>(i)];
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
      const Index sj = r.slot[static_cast<std::size_t>(it.col())];
      if (sj >= 0) {
        trips.emplace_back(si, sj, it.value());
      } else if (labels.label[static_cast<std::size_t>(it.col())] == Label::kProduct) {
        r.rhs(si) -= it.value();
      }
    }
  }
  r.cc.resize(m, m);
  r.cc.setFromTriplets(trips.begin(), trips.end());
  return r;
}

CommittorField scatter(const RegionLabels& labels, const Restricted& r, const Eigen::VectorXd& qc,
                       std::vector<Index> excluded) {
  CommittorField f;
  f.q = Eigen::VectorXd::Zero(labels.size());
  for (Index i : labels.b) f.q(i) = 1.0;
  for (Index i : r.interior) f.q(i) = qc(r.slot[static_cast<std::size_t>(i)]);
  for (Index i : excluded) f.q(i) = std::numeric_limits<double>::quiet_NaN();
  f.excluded = std::move(excluded);
  return f;
}

// Interior unknowns after applying the disconnected-point policy.
std::vector<Index> interior_points(const SparseMatrix& m, const RegionLabels& labels, DisconnectedPolicy policy,
                                   std::vector<Index>& excluded) {
  if (labels.size() != m.rows()) throw InvalidParameter("labels and operator differ in size");
  excluded = unreachable_points(m, labels);
  if (!excluded.empty() && policy == DisconnectedPolicy::kError) {
    throw SolverError(std::to_string(excluded.size()) + " free point(s) are disconnected from A and B",
                      excluded.front());
  }
  std::vector<Index> interior;
  interior.reserve(labels.c.size());
  std::size_t k = 0;
  for (Index i : labels.c) {
    while (k < excluded.size() && excluded[k] < i) ++k;
    if (k < excluded.size() && excluded[k] == i) continue;
    interior.push_back(i);
  }
  return interior;
}

double relative_residual(const ColMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double scale = b.norm();
  const double res = (a * x - b).norm();
  return scale > 0.0 ? res / scale : res;
}

constexpr double kResidualTol = 1e-10;

}  // namespace

std::string to_string(DisconnectedPolicy p) { return p == DisconnectedPolicy::kError ? "error" : "exclude"; }

DisconnectedPolicy disconnected_policy_from_string(const std::string& name) {
  if (name == "error") return DisconnectedPolicy::kError;
  if (name == "exclude") return DisconnectedPolicy::kExclude;
  throw ConfigError("unknown disconnected-point policy '" + name + "' (expected error or exclude)");
}

std::vector<Index> unreachable_points(const SparseMatrix& m, const RegionLabels& labels) {
  const Index n = m.rows();
  // Row i depends on column j, so j's boundary value propagates to i.
  std::vector<std::vector<Index>> dependents(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      if (it.col() != i && it.value() != 0.0) dependents[static_cast<std::size_t>(it.col())].push_back(i);
    }
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<Index> queue;
  for (Index i = 0; i < n; ++i) {
    if (labels.label[static_cast<std::size_t>(i)] != Label::kFree) {
      seen[static_cast<std::size_t>(i)] = 1;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const Index j = queue.front();
    queue.pop_front();
    for (Index i : dependents[static_cast<std::size_t>(j)]) {
      if (!seen[static_cast<std::size_t>(i)]) {
        seen[static_cast<std::size_t>(i)] = 1;
        queue.push_back(i);
      }
    }
  }
  std::vector<Index> out;
  for (Index i : labels.c) {
    if (!seen[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void fill_excluded(const PointCloud& cloud, CommittorField& field) {
  if (field.excluded.empty()) return;
  if (static_cast<Index>(field.excluded.size()) == cloud.size()) throw NumericalError("no solved point to fill from");
  const Index n = cloud.size();
  std::vector<char> excluded(static_cast<std::size_t>(n), 0);
  for (Index i : field.excluded) excluded[static_cast<std::size_t>(i)] = 1;
  const KdTree tree(cloud);
  for (Index i : field.excluded) {
    // Grow the query until a solved point shows up.
    for (Index k = 8;; k = std::min(2 * k, n)) {
      Index found = kNoIndex;
      for (const Neighbor& nb : tree.knn(cloud.point(i), k, i)) {
        if (!excluded[static_cast<std::size_t>(nb.index)]) {
          found = nb.index;
          break;
        }
      }
      if (found != kNoIndex) {
        field.q(i) = field.q(found);
        break;
      }
      if (k == n) break;
    }
  }
}

CommittorField solve_committor(const StiffnessMatrix& s, const RegionLabels& labels, DisconnectedPolicy policy) {
  std::vector<Index> excluded;
  const Restricted r = restrict_interior(s.matrix(), labels, interior_points(s.matrix(), labels, policy, excluded));
  const Index m = r.cc.rows();
  if (m == 0) {
    CommittorField f = scatter(labels, r, Eigen::VectorXd(), std::move(excluded));
    f.solver = "none";
    return f;
  }

  Eigen::SimplicialLDLT<ColMatrix> ldlt(r.cc);
  if (ldlt.info() == Eigen::Success) {
    const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
    const bool near_singular = !(d.minCoeff() > 1e-14 * d.maxCoeff());
    if (!near_singular) {
      const Eigen::VectorXd qc = ldlt.solve(r.rhs);
      const double res = relative_residual(r.cc, qc, r.rhs);
      if (qc.allFinite() && res <= kResidualTol) {
        CommittorField f = scatter(labels, r, qc, std::move(excluded));
        f.residual = res;
        f.solver = "ldlt";
        return f;
      }
    }
  }

  Eigen::ConjugateGradient<ColMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(10 * m);
  cg.compute(r.cc);
  const Eigen::VectorXd qc = cg.solve(r.rhs);
  const double res = relative_residual(r.cc, qc, r.rhs);
  if (!qc.allFinite() || res > kResidualTol) {
    throw SolverError("interior system is singular or ill-conditioned (residual " + format_double(res) + ")",
                      r.interior.front());
  }
  CommittorField f = scatter(labels, r, qc, std::move(excluded));
  f.residual = res;
  f.solver = "cg";
  return f;
}

CommittorField solve_committor_general(const SparseMatrix& l, const RegionLabels& labels,
                                       DisconnectedPolicy policy) {
  std::vector<Index> excluded;
  const Restricted r = restrict_interior(l, labels, interior_points(l, labels, policy, excluded));
  if (r.cc.rows() == 0) {
    CommittorField f = scatter(labels, r, Eigen::VectorXd(), std::move(excluded));
    f.solver = "none";
    return f;
  }
  ColMatrix cc = r.cc;
  cc.makeCompressed();
  Eigen::SparseLU<ColMatrix> lu;
  lu.compute(cc);
  if (lu.info() != Eigen::Success) {
    throw SolverError("sparse LU failed: " + lu.lastErrorMessage(), r.interior.front());
  }
  const Eigen::VectorXd qc = lu.solve(r.rhs);
  const double res = relative_residual(cc, qc, r.rhs);
  if (!qc.allFinite() || res > kResidualTol) {
    throw SolverError("interior system is singular or ill-conditioned (residual " + format_double(res) + ")",
                      r.interior.front());
  }
  CommittorField f = scatter(labels, r, qc, std::move(excluded));
  f.residual = res;
  f.solver = "lu";
  return f;
}

double transition_rate(const Eigen::VectorXd& q, const StiffnessMatrix& s, double z, double temperature) {
  if (!(z > 0.0)) throw NumericalError("partition function estimate is not positive");
  return temperature * s.quadratic_form(q) / z;
}

Eigen::MatrixXd committor_gradients(const Connectivity& conn, const Eigen::VectorXd& q, std::vector<Index>* unfit) {
  const Index n = conn.size();
  if (q.size() != n) throw InvalidParameter("q and connectivity differ in size");
  const Index ambient = n > 0 ? conn.tangents.front().rows() : 0;
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, ambient);
  std::vector<char> failed(static_cast<std::size_t>(n), 0);

#pragma omp parallel for schedule(dynamic, 256)
  for (Index i = 0; i < n; ++i) {
    const FirstRing& ring = conn.rings[static_cast<std::size_t>(i)];
    std::vector<int> local;
    for (int v = 0; v < static_cast<int>(ring.vertices.size()); ++v) {
      bool used = v == 0;
      for (const auto& s : ring.simplices) used = used || s[1] == v || s[2] == v;
      if (used) local.push_back(v);
    }
    const int d = ring.dim;
    if (static_cast<int>(local.size()) < d + 1) {
      failed[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    // q_v = c + g . t_v over the ring vertices
    Eigen::MatrixXd a(static_cast<Index>(local.size()), d + 1);
    Eigen::VectorXd b(static_cast<Index>(local.size()));
    for (std::size_t r = 0; r < local.size(); ++r) {
      const auto row = static_cast<Index>(r);
      a(row, 0) = 1.0;
      a.row(row).tail(d) = ring.coords.row(local[r]);
      b(row) = q(ring.vertex_id(local[r]));
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < d + 1) {
      failed[static_cast<std::size_t>(i)] = 1;
      continue;
    }
    const Eigen::VectorXd coef = qr.solve(b);
    grad.row(i) = (conn.tangents[static_cast<std::size_t>(i)] * coef.tail(d)).transpose();
  }

  if (unfit) {
    unfit->clear();
    for (Index i = 0; i < n; ++i) {
      if (failed[static_cast<std::size_t>(i)]) unfit->push_back(i);
    }
  }
  return grad;
}

ReactiveObservables reactive_observables(const CommittorField& field, const GibbsField& gibbs, double temperature) {
  const Index n = field.q.size();
  if (field.grad.rows() != n) throw InvalidParameter("committor gradients have not been computed");
  if (!(field.z > 0.0)) throw NumericalError("partition function estimate is not positive");
  ReactiveObservables out;
  out.rho_r.resize(n);
  out.j_r.resize(n, field.grad.cols());
  for (Index i = 0; i < n; ++i) {
    const double rho = gibbs.weight(i) / field.z;
    out.rho_r(i) = field.q(i) * (1.0 - field.q(i)) * rho;
    out.j_r.row(i) = temperature * rho * field.grad.row(i);
  }
  return out;
}

Eigen::VectorXd interpolate_reference(const GridField& ref, const PointCloud& coords, Index* clamped) {
  Eigen::VectorXd out(coords.size());
  Index outside = 0;
  for (Index i = 0; i < coords.size(); ++i) {
    bool c = false;
    out(i) = ref.interpolate(coords.point(i), &c);
    outside += c ? 1 : 0;
  }
  if (clamped) *clamped = outside;
  return out;
}

ErrorMetrics error_metrics(const Eigen::VectorXd& q, double nu_r, const PointCloud& coords, const GridField& ref) {
  if (q.size() != coords.size()) throw InvalidParameter("q and point set differ in size");
  ErrorMetrics m;
  const Eigen::VectorXd qr = interpolate_reference(ref, coords, &m.clamped);
  const Eigen::VectorXd diff = q - qr;
  m.e_q = diff.norm() / qr.norm();
  m.sup_abs = diff.cwiseAbs().maxCoeff();
  double sup_rel = 0.0;
  for (Index i = 0; i < q.size(); ++i) {
    if (std::abs(qr(i)) > 1e-8) sup_rel = std::max(sup_rel, std::abs(diff(i)) / std::abs(qr(i)));
  }
  m.sup_rel = sup_rel;
  if (std::isfinite(ref.nu_r) && ref.nu_r != 0.0) m.e_nu = std::abs(nu_r - ref.nu_r) / ref.nu_r;
  return m;
}

}  // namespace lmc
