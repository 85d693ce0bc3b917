#include "lmc/reactive_flow.hpp"

#include "lmc/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace lmc {

namespace {

int term_count(int dim, int degree) { return degree == 1 ? dim + 1 : (dim + 1) * (dim + 2) / 2; }

// 1, u_1..u_d, then u_a u_b for a <= b, with u = t / h.
Eigen::VectorXd monomials(const Eigen::VectorXd& t, double h, int degree) {
  const int d = static_cast<int>(t.size());
  Eigen::VectorXd m(term_count(d, degree));
  m(0) = 1.0;
  const Eigen::VectorXd u = t / h;
  m.segment(1, d) = u;
  if (degree == 2) {
    int k = d + 1;
    for (int a = 0; a < d; ++a) {
      for (int b = a; b < d; ++b) m(k++) = u(a) * u(b);
    }
  }
  return m;
}

}  // namespace

Eigen::VectorXd MlsPatch::lift(const Eigen::VectorXd& t) const {
  Eigen::VectorXd x = frame.origin + frame.tangent() * t;
  if (normal_coef.cols() > 0) {
    const Eigen::VectorXd z = normal_coef.transpose() * monomials(t, bandwidth, degree);
    x += frame.basis.rightCols(normal_coef.cols()) * z;
  }
  return x;
}

Eigen::VectorXd MlsPatch::field(const Eigen::VectorXd& t) const {
  return field_coef.transpose() * monomials(t, bandwidth, degree);
}

Eigen::VectorXd MlsPatch::field_partials(int f) const {
  return field_coef.col(f).segment(1, dim()) / bandwidth;
}

Eigen::MatrixXd MlsPatch::metric() const {
  const int d = dim();
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(d, d);
  if (normal_coef.cols() > 0) {
    const Eigen::MatrixXd dz = normal_coef.middleRows(1, d).transpose() / bandwidth;  // (N - d) x d
    g += dz.transpose() * dz;
  }
  return g;
}

Eigen::VectorXd MlsPatch::tangent_gradient(int f) const { return metric().ldlt().solve(field_partials(f)); }

Eigen::VectorXd MlsPatch::ambient_gradient(int f) const {
  const Eigen::VectorXd v = tangent_gradient(f);
  Eigen::VectorXd out = frame.tangent() * v;
  if (normal_coef.cols() > 0) {
    const Eigen::MatrixXd dz = normal_coef.middleRows(1, dim()).transpose() / bandwidth;
    out += frame.basis.rightCols(normal_coef.cols()) * (dz * v);
  }
  return out;
}

MlsPatch mls_fit(const PointCloud& cloud, std::span<const Index> stencil, const Eigen::VectorXd& center, int dim,
                 const Eigen::MatrixXd& fields, int degree) {
  if (degree != 1 && degree != 2) throw InvalidParameter("MLS degree must be 1 or 2");
  if (fields.cols() > 0 && fields.rows() != cloud.size()) throw InvalidParameter("field rows must match the cloud");
  const auto m = static_cast<Index>(stencil.size());
  RowMatrix rows(m, cloud.ambient_dim());
  for (Index r = 0; r < m; ++r) rows.row(r) = cloud.points().row(stencil[static_cast<std::size_t>(r)]);

  MlsPatch patch;
  patch.frame = fit_frame(center, rows, dim);
  const int d = patch.frame.dim;
  const Index n_normal = cloud.ambient_dim() - d;
  const RowMatrix rel = rows.rowwise() - center.transpose();
  const Eigen::MatrixXd t = rel * patch.frame.tangent();
  const Eigen::MatrixXd zn = rel * patch.frame.basis.rightCols(n_normal);

  patch.bandwidth = t.rowwise().norm().mean();
  if (!(patch.bandwidth > 0.0)) throw DegenerateNeighborhood("stencil collapses onto the center", kNoIndex);

  Eigen::VectorXd sw(m);
  for (Index r = 0; r < m; ++r) {
    const double s2 = t.row(r).squaredNorm() / (patch.bandwidth * patch.bandwidth);
    sw(r) = std::exp(-0.5 * s2);  // sqrt of exp(-|t|^2 / h^2)
  }
  Eigen::MatrixXd rhs(m, n_normal + fields.cols());
  rhs.leftCols(n_normal) = zn;
  for (Index r = 0; r < m; ++r) {
    if (fields.cols() > 0) rhs.row(r).tail(fields.cols()) = fields.row(stencil[static_cast<std::size_t>(r)]);
  }
  rhs = sw.asDiagonal() * rhs;

  for (int deg = degree; deg >= 1; --deg) {
    const int terms = term_count(d, deg);
    if (m < terms) continue;
    Eigen::MatrixXd a(m, terms);
    for (Index r = 0; r < m; ++r) a.row(r) = sw(r) * monomials(t.row(r).transpose(), patch.bandwidth, deg).transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-10);
    if (qr.rank() < terms) continue;
    const Eigen::MatrixXd coef = qr.solve(rhs);
    patch.degree = deg;
    patch.downgraded = deg < degree;
    patch.normal_coef = coef.leftCols(n_normal);
    patch.field_coef = coef.rightCols(fields.cols());
    return patch;
  }
  throw DegenerateNeighborhood("MLS normal equations are rank deficient even for a linear fit", kNoIndex);
}

std::string to_string(TraceReason reason) {
  switch (reason) {
    case TraceReason::kReachedB: return "reached B";
    case TraceReason::kMaxSteps: return "max steps";
    case TraceReason::kStalled: return "stalled";
    case TraceReason::kBoundary: return "boundary";
  }
  return "unknown";
}

namespace {

struct Local {
  std::vector<Index> stencil;
  MlsPatch patch;
};

class Tracer {
 public:
  Tracer(const PointCloud& cloud, const KdTree& tree, const Eigen::VectorXd& q, const RegionLabels& labels,
         const GibbsField& gibbs, double z, double temperature, const TraceOptions& options)
      : cloud_(cloud), tree_(tree), labels_(labels), gibbs_(gibbs), z_(z), temperature_(temperature),
        options_(options), fields_(cloud.size(), 2) {
    fields_.col(0) = q;
    for (Index i = 0; i < cloud.size(); ++i) fields_(i, 1) = gibbs.energy[static_cast<std::size_t>(i)];
  }

  Local fit(const Eigen::VectorXd& p) const {
    Local l;
    for (const Neighbor& nb : tree_.knn({p.data(), static_cast<std::size_t>(p.size())}, options_.k)) {
      l.stencil.push_back(nb.index);
    }
    l.patch = mls_fit(cloud_, l.stencil, p, options_.dim, fields_, options_.degree);
    return l;
  }

  bool in_target(const Eigen::VectorXd& p) const {
    const auto nb = tree_.knn({p.data(), static_cast<std::size_t>(p.size())}, 1);
    const Label want = options_.reverse ? Label::kReactant : Label::kProduct;
    return labels_.label[static_cast<std::size_t>(nb.front().index)] == want;
  }

  double current(const MlsPatch& patch) const {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(patch.dim());
    const double u = patch.field(zero)(1);
    const double rho = std::exp(-gibbs_.beta * u) / z_;
    return temperature_ * rho * patch.ambient_gradient(0).norm();
  }

  // Distance along `v` (unit scale) from the origin to the boundary of the
  // first ring built from the stencil; negative when the ray escapes the ring.
  double ring_exit(const Local& l, const Eigen::VectorXd& v) const {
    const MlsPatch& patch = l.patch;
    const Index m = static_cast<Index>(l.stencil.size());
    RowMatrix rows(m, cloud_.ambient_dim());
    for (Index r = 0; r < m; ++r) rows.row(r) = cloud_.points().row(l.stencil[static_cast<std::size_t>(r)]);
    const Eigen::MatrixXd t_all = project_to_tangent(patch.frame, rows);

    // Neighbors coinciding with the current position are not ring vertices.
    const double tiny = 1e-12 * patch.bandwidth;
    std::vector<Index> ids;
    std::vector<Index> keep;
    for (Index r = 0; r < m; ++r) {
      if (t_all.row(r).norm() > tiny) {
        keep.push_back(r);
        ids.push_back(l.stencil[static_cast<std::size_t>(r)]);
      }
    }
    Eigen::MatrixXd t(static_cast<Index>(keep.size()), t_all.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) t.row(static_cast<Index>(r)) = t_all.row(keep[r]);
    const FirstRing ring = delaunay_first_ring(kNoIndex, t, ids);

    double best = -1.0;
    for (const auto& s : ring.simplices) {
      if (ring.dim == 1) {
        const double x = ring.coords(s[1], 0);
        if (x * v(0) > 0.0) {
          const double hit = x / v(0);
          if (best < 0.0 || hit < best) best = hit;
        }
        continue;
      }
      const Eigen::Vector2d a = ring.coords.row(s[1]).transpose();
      const Eigen::Vector2d b = ring.coords.row(s[2]).transpose();
      // hit * v = a + s (b - a)
      Eigen::Matrix2d mat;
      mat.col(0) = v;
      mat.col(1) = a - b;
      const double det = mat.determinant();
      if (std::abs(det) <= 1e-300) continue;
      const Eigen::Vector2d sol = mat.inverse() * a;
      const double eps = 1e-12;
      if (sol(0) > 0.0 && sol(1) >= -eps && sol(1) <= 1.0 + eps && (best < 0.0 || sol(0) < best)) best = sol(0);
    }
    return best;
  }

  FlowTrace run(const Eigen::VectorXd& start) const {
    if (start.size() != cloud_.ambient_dim()) throw InvalidParameter("start point has the wrong dimension");
    const double min_step = options_.min_step > 0.0 ? options_.min_step : 1e-6 * cloud_.diameter();
    const double sign = options_.reverse ? -1.0 : 1.0;
    constexpr double kMonotoneTol = 1e-9;

    std::vector<Eigen::VectorXd> pts{start};
    std::vector<double> qs, js;
    FlowTrace out;

    Local cur = fit(start);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(cur.patch.dim());
    qs.push_back(cur.patch.field(zero)(0));
    js.push_back(current(cur.patch));
    out.downgraded += cur.patch.downgraded ? 1 : 0;

    if (in_target(start)) {
      out.reason = TraceReason::kReachedB;
    } else {
      out.reason = TraceReason::kMaxSteps;
      for (Index step = 0; step < options_.max_steps; ++step) {
        const Eigen::VectorXd v = sign * cur.patch.tangent_gradient(0);
        const double vn = v.norm();
        if (!(vn * cur.patch.bandwidth > 1e-14)) {
          out.reason = TraceReason::kStalled;
          break;
        }
        const Eigen::VectorXd dir = v / vn;
        double len = ring_exit(cur, dir);
        if (len <= 0.0) {
          out.reason = TraceReason::kBoundary;
          break;
        }
        const Eigen::VectorXd& p = pts.back();
        const double q_cur = qs.back();
        bool accepted = false;
        Eigen::VectorXd p_new;
        Local next;
        while (true) {
          p_new = cur.patch.lift(len * dir);
          if ((p_new - p).norm() < min_step) break;
          next = fit(p_new);
          const double q_new = next.patch.field(zero)(0);
          if (sign * (q_new - q_cur) >= -kMonotoneTol) {
            accepted = true;
            break;
          }
          len *= 0.5;
        }
        if (!accepted) {
          out.reason = TraceReason::kStalled;
          break;
        }
        cur = std::move(next);
        pts.push_back(p_new);
        qs.push_back(cur.patch.field(zero)(0));
        js.push_back(current(cur.patch));
        out.downgraded += cur.patch.downgraded ? 1 : 0;
        ++out.steps;
        if (in_target(p_new)) {
          out.reason = TraceReason::kReachedB;
          break;
        }
      }
    }

    out.points.resize(static_cast<Index>(pts.size()), cloud_.ambient_dim());
    out.q.resize(static_cast<Index>(pts.size()));
    out.j_norm.resize(static_cast<Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      out.points.row(static_cast<Index>(k)) = pts[k].transpose();
      out.q(static_cast<Index>(k)) = qs[k];
      out.j_norm(static_cast<Index>(k)) = js[k];
    }
    return out;
  }

 private:
  const PointCloud& cloud_;
  const KdTree& tree_;
  const RegionLabels& labels_;
  const GibbsField& gibbs_;
  double z_;
  double temperature_;
  TraceOptions options_;
  Eigen::MatrixXd fields_;
};

}  // namespace

FlowTrace trace_reactive_flow(const PointCloud& cloud, const KdTree& tree, const Eigen::VectorXd& q,
                              const RegionLabels& labels, const GibbsField& gibbs, double z, double temperature,
                              const Eigen::VectorXd& start, const TraceOptions& options) {
  if (q.size() != cloud.size() || labels.size() != cloud.size() || gibbs.size() != cloud.size()) {
    throw InvalidParameter("q, labels and Gibbs field must match the cloud");
  }
  if (options.k < 3 || options.k > cloud.size()) throw InvalidParameter("trace stencil size out of range");
  return Tracer(cloud, tree, q, labels, gibbs, z, temperature, options).run(start);
}

}  // namespace lmc
