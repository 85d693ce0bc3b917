#include "lmc/diffusion_map.hpp"
#include "lmc/errors.hpp"
#include "lmc/pipeline.hpp"
#include "lmc/reactive_flow.hpp"
#include "lmc/reference.hpp"
#include "lmc/sampler.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace lmc;

namespace {

PotentialSpec make_spec(const std::string& kind, double beta, double rugged_gamma, double rugged_k, int flat_dim,
                        double energy_shift) {
  PotentialSpec spec;
  spec.kind = potential_kind_from_string(kind);
  spec.beta = beta;
  spec.rugged_gamma = rugged_gamma;
  spec.rugged_k = rugged_k;
  spec.flat_dim = flat_dim;
  spec.energy_shift = energy_shift;
  return spec;
}

// The potential evaluated on coordinates of the given dimension (lifted when wider).
Potential fitted(const Potential& u, int dim) {
  if (dim <= u.intrinsic_dim()) return u;
  PotentialSpec spec = u.spec();
  spec.ambient_dim = dim;
  return Potential(spec);
}

struct Problem {
  PointCloud cloud;
  std::optional<PointCloud> generating;
  Potential potential;
  GibbsField gibbs;
  RegionLabels labels;
};

Problem make_problem(const RowMatrix& points, const Potential& u, const std::string& a, const std::string& b,
                     const std::optional<RowMatrix>& generating) {
  Problem p{PointCloud(points), std::nullopt, u, {}, {}};
  if (generating) {
    p.generating = PointCloud(*generating);
    if (p.generating->size() != p.cloud.size())
      throw InvalidParameter("generating points and points differ in number");
  }
  const PointCloud& coords = p.generating ? *p.generating : p.cloud;
  p.potential = fitted(u, coords.ambient_dim());
  p.gibbs = gibbs_field(p.potential, coords);
  p.labels = classify_regions(RegionSpec::parse(a), RegionSpec::parse(b), p.potential, coords);
  return p;
}

std::vector<int> label_codes(const RegionLabels& labels) {
  std::vector<int> out;
  out.reserve(labels.label.size());
  for (Label l : labels.label) out.push_back(static_cast<int>(l));
  return out;
}

py::dict field_dict(const CommittorField& f) {
  py::dict d;
  d["q"] = f.q;
  d["nu_r"] = f.nu_r;
  d["z"] = f.z;
  d["residual"] = f.residual;
  d["solver"] = f.solver;
  d["excluded"] = f.excluded;
  if (f.grad.size() > 0) d["grad"] = f.grad;
  return d;
}

py::dict grid_dict(const GridField& g) {
  py::dict d;
  d["dim"] = g.dim;
  d["lo"] = g.lo;
  d["hi"] = g.hi;
  d["nodes"] = g.nodes;
  if (g.dim == 2) {
    d["q"] = Eigen::MatrixXd(Eigen::Map<const RowMatrix>(g.values.data(), g.nodes[0], g.nodes[1]));
  } else {
    d["q"] = g.values;
  }
  d["nu_r"] = g.nu_r;
  d["z"] = g.z;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Committor functions of overdamped Langevin dynamics on point clouds";

  auto base = py::register_exception<Error>(m, "LmcError", PyExc_RuntimeError);
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<Potential>(m, "Potential")
      .def(py::init([](const std::string& kind, double beta, double rugged_gamma, double rugged_k, int flat_dim,
                       double energy_shift) {
             return Potential(make_spec(kind, beta, rugged_gamma, rugged_k, flat_dim, energy_shift));
           }),
           py::arg("kind") = "double_well", py::arg("beta") = 1.0, py::arg("rugged_gamma") = 9.0,
           py::arg("rugged_k") = 5.0, py::arg("flat_dim") = 1, py::arg("energy_shift") = 0.0)
      .def_property_readonly("kind", [](const Potential& u) { return to_string(u.spec().kind); })
      .def_property_readonly("beta", &Potential::beta)
      .def_property_readonly("intrinsic_dim", &Potential::intrinsic_dim)
      .def("value",
           [](const Potential& u, const std::vector<double>& x) {
             return fitted(u, static_cast<int>(x.size())).value(x);
           })
      .def("gradient",
           [](const Potential& u, const std::vector<double>& x) {
             std::vector<double> g(x.size());
             fitted(u, static_cast<int>(x.size())).gradient(x, g);
             return g;
           })
      .def("energies", [](const Potential& u, const RowMatrix& points) {
        return fitted(u, static_cast<int>(points.cols())).energies(PointCloud(points));
      });

  m.def(
      "sample",
      [](const Potential& u, const std::vector<double>& x0, Index n_snapshots, double dt, Index stride,
         std::uint64_t seed, Index burn_in, const std::vector<double>& box_lo, const std::vector<double>& box_hi) {
        SamplerConfig sc;
        sc.x0 = x0;
        sc.n_snapshots = n_snapshots;
        sc.dt = dt;
        sc.stride = stride;
        sc.seed = seed;
        sc.burn_in = burn_in;
        sc.box_lo = box_lo;
        sc.box_hi = box_hi;
        SampleResult r;
        {
          py::gil_scoped_release release;
          r = sample_trajectory(u, sc);
        }
        py::dict d;
        d["points"] = r.cloud.points();
        d["kept"] = r.kept;
        d["discarded"] = r.discarded;
        d["duplicates"] = r.duplicates;
        return d;
      },
      "Euler-Maruyama snapshots of overdamped Langevin dynamics", py::arg("potential"), py::arg("x0"),
      py::arg("n_snapshots"), py::arg("dt"), py::arg("stride") = 1, py::arg("seed") = 0, py::arg("burn_in") = 0,
      py::arg("box_lo") = std::vector<double>{}, py::arg("box_hi") = std::vector<double>{});

  m.def(
      "knn",
      [](const RowMatrix& points, Index k) {
        const NeighborIndex nb = knn(PointCloud(points), k);
        RowMatrix dist(nb.size(), k);
        Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> idx(nb.size(), k);
        for (Index i = 0; i < nb.size(); ++i) {
          for (Index j = 0; j < k; ++j) {
            idx(i, j) = nb.neighbors(i)[static_cast<std::size_t>(j)];
            dist(i, j) = nb.distances(i)[static_cast<std::size_t>(j)];
          }
        }
        return py::make_tuple(idx, dist);
      },
      "K nearest neighbors of every point (self excluded)", py::arg("points"), py::arg("k"));

  m.def(
      "max_fiftieth_neighbor_distance", [](const RowMatrix& points) {
        return max_fiftieth_neighbor_distance(PointCloud(points));
      },
      py::arg("points"));

  m.def(
      "embed_with_noise",
      [](const RowMatrix& points, int ambient_dim, double gamma, std::uint64_t seed) {
        return embed_with_noise(PointCloud(points), ambient_dim, gamma, seed).points();
      },
      "Zero-pad into R^N and add Gaussian noise with sd gamma * d_max", py::arg("points"), py::arg("ambient_dim"),
      py::arg("gamma"), py::arg("seed"));

  m.def(
      "classify",
      [](const RowMatrix& points, const Potential& u, const std::string& a, const std::string& b) {
        return label_codes(make_problem(points, u, a, b, std::nullopt).labels);
      },
      "Region labels: 0 free, 1 reactant A, 2 product B", py::arg("points"), py::arg("potential"), py::arg("a"),
      py::arg("b"));

  m.def(
      "solve_local_mesh",
      [](const RowMatrix& points, const Potential& u, const std::string& a, const std::string& b,
         std::optional<int> dim, Index k, const std::string& symmetrization, const std::string& disconnected,
         bool isolate, bool gradients, const std::optional<RowMatrix>& generating) {
        Problem p = make_problem(points, u, a, b, generating);
        LocalMeshOptions o;
        o.mesh.dim = dim;
        o.mesh.k = k;
        o.mesh.on_failure = isolate ? FailurePolicy::kIsolate : FailurePolicy::kAbort;
        o.symmetrization = symmetrization_from_string(symmetrization);
        o.disconnected = disconnected_policy_from_string(disconnected);
        o.gradients = gradients;
        LocalMeshSolution sol;
        {
          py::gil_scoped_release release;
          sol = solve_local_mesh(p.cloud, p.gibbs, p.labels, o);
        }
        py::dict d = field_dict(sol.field);
        d["mass"] = sol.mass.mass;
        d["dim"] = sol.conn.dim;
        d["isolated"] = sol.conn.isolated;
        d["labels"] = label_codes(p.labels);
        return d;
      },
      "Committor and transition rate by local tangent-plane meshes", py::arg("points"), py::arg("potential"),
      py::arg("a"), py::arg("b"), py::arg("dim") = 2, py::arg("k") = 0, py::arg("symmetrization") = "minmax",
      py::arg("disconnected") = "error", py::arg("isolate") = false, py::arg("gradients") = false,
      py::arg("generating") = py::none());

  m.def(
      "solve_diffusion_map",
      [](const RowMatrix& points, const Potential& u, const std::string& a, const std::string& b,
         std::optional<double> epsilon, bool adaptive, const std::optional<RowMatrix>& generating) {
        Problem p = make_problem(points, u, a, b, generating);
        DmOptions o;
        o.epsilon = epsilon;
        o.adaptive = adaptive;
        DmSolution sol;
        {
          py::gil_scoped_release release;
          sol = solve_diffusion_map(p.cloud, p.gibbs, p.labels, o);
        }
        py::dict d = field_dict(sol.field);
        d["epsilon"] = sol.op.epsilon;
        d["labels"] = label_codes(p.labels);
        return d;
      },
      "Committor by the diffusion-map generator", py::arg("points"), py::arg("potential"), py::arg("a"), py::arg("b"),
      py::arg("epsilon") = py::none(), py::arg("adaptive") = false, py::arg("generating") = py::none());

  m.def(
      "fem_solve_1d",
      [](const Potential& u, double lo, double hi, Index n_nodes, const std::string& a, const std::string& b) {
        return grid_dict(fem_solve_1d(u, lo, hi, n_nodes, RegionSpec::parse(a), RegionSpec::parse(b)));
      },
      py::arg("potential"), py::arg("lo"), py::arg("hi"), py::arg("n_nodes"), py::arg("a"), py::arg("b"));

  m.def(
      "grid_solve_2d",
      [](const Potential& u, const std::vector<double>& lo, const std::vector<double>& hi, Index nx, Index ny,
         const std::string& a, const std::string& b) {
        GridField g;
        {
          py::gil_scoped_release release;
          g = grid_solve_2d(u, lo, hi, nx, ny, RegionSpec::parse(a), RegionSpec::parse(b));
        }
        return grid_dict(g);
      },
      py::arg("potential"), py::arg("lo"), py::arg("hi"), py::arg("nx"), py::arg("ny"), py::arg("a"), py::arg("b"));

  m.def(
      "closed_form_1d", [](const Potential& u, double a, double b, double x) { return closed_form_1d(u, a, b, x); },
      py::arg("potential"), py::arg("a"), py::arg("b"), py::arg("x"));

  m.def(
      "mc_committor",
      [](const Potential& u, const std::vector<double>& x0, const std::string& a, const std::string& b,
         Index n_paths, double dt, std::uint64_t seed) {
        McOptions o;
        o.n_paths = n_paths;
        o.dt = dt;
        o.seed = seed;
        McResult r;
        {
          py::gil_scoped_release release;
          r = mc_committor(u, x0, RegionSpec::parse(a), RegionSpec::parse(b), o);
        }
        py::dict d;
        d["estimate"] = r.estimate;
        d["std_error"] = r.std_error;
        d["used"] = r.used;
        d["censored"] = r.censored;
        return d;
      },
      "Fraction of paths from x0 that reach B before A", py::arg("potential"), py::arg("x0"), py::arg("a"),
      py::arg("b"), py::arg("n_paths") = 1000, py::arg("dt") = 1e-4, py::arg("seed") = 0);

  m.def(
      "trace",
      [](const RowMatrix& points, const Eigen::VectorXd& q, const Potential& u, const std::string& a,
         const std::string& b, const Eigen::VectorXd& start, Index max_steps, bool reverse, int dim,
         const std::optional<RowMatrix>& generating) {
        Problem p = make_problem(points, u, a, b, generating);
        LocalMeshOptions o;
        o.mesh.dim = dim;
        const MassVector mass = lumped_mass(build_connectivity(p.cloud, o.mesh), p.gibbs);
        TraceOptions t;
        t.max_steps = max_steps;
        t.reverse = reverse;
        t.dim = dim;
        const KdTree tree(p.cloud);
        const FlowTrace tr =
            trace_reactive_flow(p.cloud, tree, q, p.labels, p.gibbs, mass.z, temperature_of(p.gibbs), start, t);
        py::dict d;
        d["points"] = tr.points;
        d["q"] = tr.q;
        d["j_norm"] = tr.j_norm;
        d["reason"] = to_string(tr.reason);
        d["steps"] = tr.steps;
        return d;
      },
      "Reactive-flow polyline from a start point", py::arg("points"), py::arg("q"), py::arg("potential"),
      py::arg("a"), py::arg("b"), py::arg("start"), py::arg("max_steps") = 10000, py::arg("reverse") = false,
      py::arg("dim") = 2, py::arg("generating") = py::none());
}
