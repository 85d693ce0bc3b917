#include "cli.hpp"

#include "lmc/config.hpp"
#include "lmc/errors.hpp"
#include "lmc/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>

namespace lmc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Args {
  std::string subcommand;
  std::string config_file;
  std::vector<std::string> overrides;
};

/// Cloud plus everything derived from the configuration that the solvers need.
struct Problem {
  PointCloud cloud;
  std::optional<PointCloud> generating;
  Potential potential{PotentialSpec{}};
  RegionLabels labels;
  GibbsField gibbs;
};

std::vector<std::string> comment_lines(const std::string& subcommand, const ExperimentConfig& cfg) {
  std::vector<std::string> lines{"lmc " + subcommand};
  for (const auto& [k, v] : cfg.resolved()) lines.push_back(k + "=" + v);
  return lines;
}

json config_json(const ExperimentConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.resolved()) j[k] = v;
  return j;
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& name) { return fs::path(cfg.output_dir) / name; }

/// Points-plus-columns CSV with the resolved config as leading comments.
void write_table(const fs::path& path, const std::vector<std::string>& comments, const RowMatrix& points,
                 const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& columns) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path.string() + "'");
  for (const std::string& c : comments) out << "# " << c << '\n';
  for (Index a = 0; a < points.cols(); ++a) out << (a ? "," : "") << 'x' << a;
  for (const auto& [name, col] : columns) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index a = 0; a < points.cols(); ++a) out << (a ? "," : "") << format_double(points(i, a));
    for (const auto& [name, col] : columns) out << ',' << format_double((*col)(i));
    out << '\n';
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

Potential make_potential(const ExperimentConfig& cfg, int ambient_dim) {
  PotentialSpec spec = cfg.potential;
  Potential probe(spec);
  if (ambient_dim > probe.intrinsic_dim()) spec.ambient_dim = ambient_dim;
  return Potential(spec);
}

Problem load_problem(const ExperimentConfig& cfg) {
  if (cfg.input_points.empty()) throw ConfigError("this subcommand needs 'input.points'");
  Problem p;
  p.cloud = load_csv(cfg.input_points);
  if (!cfg.input_generating.empty()) {
    p.generating = load_csv(cfg.input_generating);
    if (p.generating->size() != p.cloud.size()) {
      throw ConfigError("input.generating and input.points have different numbers of points");
    }
  }
  const PointCloud& coords = p.generating ? *p.generating : p.cloud;
  p.potential = make_potential(cfg, coords.ambient_dim());
  const RegionSpec a = RegionSpec::parse(cfg.region_a);
  const RegionSpec b = RegionSpec::parse(cfg.region_b);
  p.labels = classify_regions(a, b, p.potential, coords);
  p.gibbs = gibbs_field(p.potential, coords);
  return p;
}

/// Where region labels and Gibbs weights were evaluated: the generating points,
/// the cloud itself, or the first coordinates of a cloud wider than the potential.
std::string energy_source(const Problem& p) {
  if (p.generating) return "generating";
  return p.cloud.ambient_dim() > p.potential.intrinsic_dim() ? "projection" : "points";
}

std::optional<GridField> reference_for(const ExperimentConfig& cfg, const Potential& potential) {
  if (cfg.reference_file.empty()) return std::nullopt;
  if (cfg.reference_file != "auto") return load_grid_field(cfg.reference_file);
  const RegionSpec a = RegionSpec::parse(cfg.region_a);
  const RegionSpec b = RegionSpec::parse(cfg.region_b);
  if (potential.intrinsic_dim() == 1) {
    if (cfg.reference_lo.size() != 1) throw ConfigError("1D reference needs one-dimensional reference.lo/hi/nodes");
    return fem_solve_1d(potential, cfg.reference_lo[0], cfg.reference_hi[0], cfg.reference_nodes[0], a, b);
  }
  if (cfg.reference_lo.size() != 2) throw ConfigError("2D reference needs two-dimensional reference.lo/hi/nodes");
  return grid_solve_2d(potential, cfg.reference_lo, cfg.reference_hi, cfg.reference_nodes[0], cfg.reference_nodes[1],
                       a, b);
}

LocalMeshOptions local_mesh_options(const ExperimentConfig& cfg) {
  LocalMeshOptions o;
  o.mesh = cfg.mesh;
  o.symmetrization = cfg.symmetrization;
  o.disconnected = cfg.disconnected;
  o.gradients = cfg.gradients;
  return o;
}

json field_json(const CommittorField& f) {
  json j;
  j["nu_R"] = f.nu_r;
  j["Z"] = f.z;
  j["residual"] = f.residual;
  j["solver"] = f.solver;
  j["excluded"] = f.excluded.size();
  j["q_min"] = f.q.size() ? f.q.minCoeff() : 0.0;
  j["q_max"] = f.q.size() ? f.q.maxCoeff() : 0.0;
  return j;
}

json metrics_json(const ErrorMetrics& m) {
  json j;
  j["E_q"] = m.e_q;
  j["E_nuR"] = m.e_nu;
  j["sup_abs"] = m.sup_abs;
  j["sup_rel"] = m.sup_rel;
  j["clamped"] = m.clamped;
  return j;
}

json header(const std::string& subcommand, const ExperimentConfig& cfg) {
  json j;
  j["subcommand"] = subcommand;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  j["config"] = config_json(cfg);
  return j;
}

// ---------------------------------------------------------------------------

json cmd_sample(const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  const Potential potential = make_potential(cfg, 0);
  SamplerConfig sc = cfg.sampler;
  sc.seed = seed;
  const SampleResult r = sample_trajectory(potential, sc);

  json j = header("sample", cfg);
  j["kept"] = r.kept;
  j["discarded"] = r.discarded;
  j["duplicates"] = r.duplicates;
  j["n"] = r.cloud.size();

  const auto comments = comment_lines("sample", cfg);
  if (cfg.noise_ambient_dim > 0) {
    const PointCloud noisy = embed_with_noise(r.cloud, cfg.noise_ambient_dim, cfg.noise_gamma, seed + 1);
    write_table(output_path(cfg, "points.csv"), comments, noisy.points(), {});
    write_table(output_path(cfg, "generating.csv"), comments, r.cloud.points(), {});
    j["ambient_dim"] = cfg.noise_ambient_dim;
  } else {
    write_table(output_path(cfg, "points.csv"), comments, r.cloud.points(), {});
    j["ambient_dim"] = r.cloud.ambient_dim();
  }
  return j;
}

json cmd_connect(const ExperimentConfig& cfg) {
  if (cfg.input_points.empty()) throw ConfigError("connect needs 'input.points'");
  const PointCloud cloud = load_csv(cfg.input_points);
  const Connectivity conn = build_connectivity(cloud, cfg.mesh);
  std::ofstream out(output_path(cfg, "connectivity.txt"));
  if (!out) throw InvalidParameter("cannot write connectivity.txt");
  for (const std::string& c : comment_lines("connect", cfg)) out << "# " << c << '\n';
  out << format_connectivity(conn);

  json j = header("connect", cfg);
  j["n"] = cloud.size();
  j["k"] = conn.k;
  j["d"] = conn.dim;
  j["isolated"] = conn.isolated;
  j["flagged"] = conn.flagged.size();
  Index boundary = 0;
  for (const FirstRing& r : conn.rings) boundary += r.boundary ? 1 : 0;
  j["boundary_rings"] = boundary;
  return j;
}

struct Solved {
  CommittorField field;
  std::optional<LocalMeshSolution> lm;
};

Solved solve_problem(const ExperimentConfig& cfg, const Problem& p, SolverMethod method) {
  Solved s;
  if (method == SolverMethod::kLocalMesh) {
    s.lm = solve_local_mesh(p.cloud, p.gibbs, p.labels, local_mesh_options(cfg));
    s.field = s.lm->field;
  } else if (method == SolverMethod::kDiffusionMap) {
    s.field = solve_diffusion_map(p.cloud, p.gibbs, p.labels, cfg.dm, cfg.disconnected).field;
  } else {
    const auto ref = reference_for(cfg, p.potential);
    if (!ref) throw ConfigError("solver.method = reference needs reference.file (a path or auto)");
    const PointCloud& coords = p.generating ? *p.generating : p.cloud;
    s.field.q = interpolate_reference(*ref, coords);
    for (Index i : p.labels.a) s.field.q(i) = 0.0;
    for (Index i : p.labels.b) s.field.q(i) = 1.0;
    s.field.nu_r = ref->nu_r;
    s.field.z = ref->z;
    s.field.solver = "reference";
  }
  return s;
}

json cmd_solve(const ExperimentConfig& cfg, bool write_fields) {
  const Problem p = load_problem(cfg);
  const Solved s = solve_problem(cfg, p, cfg.method);
  const std::string name = write_fields ? "solve" : "rate";

  json j = header(name, cfg);
  j["n"] = p.cloud.size();
  j["|A|"] = p.labels.a.size();
  j["|B|"] = p.labels.b.size();
  j["method"] = to_string(cfg.method);
  j["energy_source"] = energy_source(p);
  j.update(field_json(s.field));
  if (s.lm) {
    j["isolated"] = s.lm->conn.isolated.size();
    j["k"] = s.lm->conn.k;
  }
  if (const auto ref = reference_for(cfg, p.potential)) {
    const PointCloud& coords = p.generating ? *p.generating : p.cloud;
    const ErrorMetrics m = error_metrics(s.field.q, s.field.nu_r, coords, *ref);
    j.update(metrics_json(m));
    j["nu_R_reference"] = ref->nu_r;
  }

  if (write_fields) {
    const auto comments = comment_lines(name, cfg);
    write_table(output_path(cfg, "q.csv"), comments, p.cloud.points(), {{"q", &s.field.q}});
    if (cfg.gradients && s.field.grad.size() > 0) {
      std::ofstream out(output_path(cfg, "gradient.csv"));
      if (!out) throw InvalidParameter("cannot write gradient.csv");
      for (const std::string& c : comments) out << "# " << c << '\n';
      for (Index a = 0; a < s.field.grad.cols(); ++a) out << (a ? "," : "") << "dq" << a;
      out << '\n';
      for (Index i = 0; i < s.field.grad.rows(); ++i) {
        for (Index a = 0; a < s.field.grad.cols(); ++a) out << (a ? "," : "") << format_double(s.field.grad(i, a));
        out << '\n';
      }
    }
  }
  return j;
}

json cmd_trace(const ExperimentConfig& cfg) {
  if (cfg.trace_start.empty()) throw ConfigError("trace needs 'trace.start'");
  const Problem p = load_problem(cfg);
  const Solved s = solve_problem(cfg, p, SolverMethod::kLocalMesh);
  if (static_cast<int>(cfg.trace_start.size()) != p.cloud.ambient_dim()) {
    throw ConfigError("trace.start has " + std::to_string(cfg.trace_start.size()) + " coordinates, the cloud " +
                      std::to_string(p.cloud.ambient_dim()));
  }
  const KdTree tree(p.cloud);
  const Eigen::VectorXd start = Eigen::Map<const Eigen::VectorXd>(cfg.trace_start.data(),
                                                                   static_cast<Index>(cfg.trace_start.size()));
  const FlowTrace t = trace_reactive_flow(p.cloud, tree, s.field.q, p.labels, p.gibbs, s.field.z,
                                          temperature_of(p.gibbs), start, cfg.trace);
  write_table(output_path(cfg, "trace.csv"), comment_lines("trace", cfg), t.points,
              {{"q", &t.q}, {"j_norm", &t.j_norm}});
  json j = header("trace", cfg);
  j["energy_source"] = energy_source(p);
  j["steps"] = t.steps;
  j["reason"] = to_string(t.reason);
  j["downgraded"] = t.downgraded;
  j["nu_R"] = s.field.nu_r;
  return j;
}

json cmd_reference(const ExperimentConfig& cfg) {
  const Potential potential = make_potential(cfg, 0);
  ExperimentConfig c = cfg;
  if (c.reference_file.empty()) c.reference_file = "auto";
  const GridField ref = *reference_for(c, potential);
  save_grid_field(ref, output_path(cfg, "reference_grid.csv").string(), comment_lines("reference", cfg));

  json j = header("reference", cfg);
  j["nu_R"] = ref.nu_r;
  j["Z"] = ref.z;
  j["nodes"] = ref.nodes;
  if (!cfg.mc_x0.empty()) {
    McOptions mo = cfg.mc;
    mo.seed = cfg.require_seed();
    const RegionSpec a = RegionSpec::parse(cfg.region_a);
    const RegionSpec b = RegionSpec::parse(cfg.region_b);
    const McResult r = mc_committor(potential, cfg.mc_x0, a, b, mo);
    json mc;
    mc["x0"] = cfg.mc_x0;
    mc["estimate"] = r.estimate;
    mc["std_error"] = r.std_error;
    mc["used"] = r.used;
    mc["censored"] = r.censored;
    mc["warning"] = r.warning ? json(*r.warning) : json(nullptr);
    mc["reference_q"] = ref.interpolate(cfg.mc_x0);
    j["monte_carlo"] = mc;
  }
  return j;
}

json cmd_compare(const ExperimentConfig& cfg) {
  const std::uint64_t seed = cfg.require_seed();
  const Potential potential = make_potential(cfg, 0);
  ExperimentConfig c = cfg;
  if (c.reference_file.empty()) c.reference_file = "auto";
  const GridField ref = *reference_for(c, potential);
  const RegionSpec a = RegionSpec::parse(cfg.region_a);
  const RegionSpec b = RegionSpec::parse(cfg.region_b);
  const bool one_d = potential.intrinsic_dim() == 1;

  json runs = json::array();
  std::vector<PointCloud> clouds;
  std::vector<Eigen::VectorXd> q_lm, q_dm;
  for (int r = 0; r < cfg.compare_repeats; ++r) {
    SamplerConfig sc = cfg.sampler;
    sc.seed = seed + static_cast<std::uint64_t>(r);
    const PointCloud cloud = sample_trajectory(potential, sc).cloud;
    const RegionLabels labels = classify_regions(a, b, potential, cloud);
    const GibbsField gibbs = gibbs_field(potential, cloud);
    const LocalMeshSolution lm = solve_local_mesh(cloud, gibbs, labels, local_mesh_options(cfg));
    const DmSolution dm = solve_diffusion_map(cloud, gibbs, labels, cfg.dm, cfg.disconnected);
    json run;
    run["seed"] = sc.seed;
    run["n"] = cloud.size();
    run["local_mesh"] = metrics_json(error_metrics(lm.field.q, lm.field.nu_r, cloud, ref));
    run["local_mesh"]["nu_R"] = lm.field.nu_r;
    run["dm"] = metrics_json(error_metrics(dm.field.q, std::numeric_limits<double>::quiet_NaN(), cloud, ref));
    runs.push_back(run);
    clouds.push_back(cloud);
    q_lm.push_back(lm.field.q);
    q_dm.push_back(dm.field.q);
  }

  json j = header("compare", cfg);
  j["runs"] = runs;
  if (one_d) {
    // Common grid over the range every cloud covers.
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (const PointCloud& cl : clouds) {
      lo = std::max(lo, cl.points().col(0).minCoeff());
      hi = std::min(hi, cl.points().col(0).maxCoeff());
    }
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(cfg.compare_grid, lo, hi);
    std::vector<Eigen::VectorXd> rl, rd;
    for (std::size_t r = 0; r < clouds.size(); ++r) {
      rl.push_back(resample_1d(clouds[r], q_lm[r], grid));
      rd.push_back(resample_1d(clouds[r], q_dm[r], grid));
    }
    j["spread"] = {{"local_mesh", max_pairwise_sup(rl)}, {"dm", max_pairwise_sup(rd)}};
  } else {
    j["spread"] = nullptr;
  }
  save_grid_field(ref, output_path(cfg, "reference_grid.csv").string(), comment_lines("compare", cfg));
  write_json(output_path(cfg, "metrics.json"), j);
  return j;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message,
         std::optional<std::int64_t> point = std::nullopt, std::optional<std::size_t> line = std::nullopt) {
  json e;
  e["error"] = {{"kind", kind}, {"message", message}};
  if (point) e["error"]["point"] = *point;
  if (line) e["error"]["line"] = *line;
  e["exit_code"] = code;
  err << e.dump() << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Committor functions on point clouds via local tangent-plane meshes"};
  app.require_subcommand(1);
  Args args;
  std::optional<std::uint64_t> seed;
  std::string points, output, method, epsilon, start, reference;
  bool reverse = false;

  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"sample", "Sample a point cloud with Euler-Maruyama (points.csv)"},
      {"connect", "Build local meshes (connectivity.txt)"},
      {"solve", "Solve for the committor (q.csv, metrics.json)"},
      {"rate", "Transition rate and partition function (metrics.json)"},
      {"trace", "Trace the reactive flow from a start point (trace.csv)"},
      {"reference", "Grid or finite-element reference (reference_grid.csv)"},
      {"compare", "Local mesh vs diffusion map over repeated samples (metrics.json)"},
  };
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", args.config_file, "Config file (key = value)");
    sub->add_option("-s,--set", args.overrides, "Override a config key, key=value");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("-p,--points", points, "Input point CSV (input.points)");
    sub->add_option("-o,--output", output, "Output directory (output.dir)");
    sub->add_option("--reference", reference, "Reference grid CSV or 'auto' (reference.file)");
    if (name == "solve" || name == "rate") {
      sub->add_option("--method", method, "local_mesh, dm or reference");
      sub->add_option("--epsilon", epsilon, "Diffusion-map bandwidth or 'auto'");
    }
    if (name == "trace") {
      sub->add_option("--start", start, "Start point, comma separated");
      sub->add_flag("--reverse", reverse, "Follow -grad q");
    }
    sub->callback([&args, name = name] { args.subcommand = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail(err, kExitConfig, "usage", e.what());
  }

  try {
    std::map<std::string, std::string> values;
    if (!args.config_file.empty()) values = read_config_file(args.config_file);
    for (const std::string& o : args.overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
      values[o.substr(0, eq)] = o.substr(eq + 1);
    }
    if (seed) values["seed"] = std::to_string(*seed);
    if (!points.empty()) values["input.points"] = points;
    if (!output.empty()) values["output.dir"] = output;
    if (!reference.empty()) values["reference.file"] = reference;
    if (!method.empty()) values["solver.method"] = method;
    if (!epsilon.empty()) values["dm.epsilon"] = epsilon;
    if (!start.empty()) values["trace.start"] = start;
    if (reverse) values["trace.reverse"] = "true";
    const ExperimentConfig cfg = make_config(values);

    fs::create_directories(cfg.output_dir);
    json result;
    const std::string& sc = args.subcommand;
    if (sc == "sample") {
      result = cmd_sample(cfg);
    } else if (sc == "connect") {
      result = cmd_connect(cfg);
    } else if (sc == "solve") {
      result = cmd_solve(cfg, true);
    } else if (sc == "rate") {
      result = cmd_solve(cfg, false);
    } else if (sc == "trace") {
      result = cmd_trace(cfg);
    } else if (sc == "reference") {
      result = cmd_reference(cfg);
    } else {
      result = cmd_compare(cfg);
    }
    if (sc != "compare") write_json(output_path(cfg, "metrics.json"), result);
    out << result.dump(2) << '\n';
    return kExitOk;
  } catch (const ParseError& e) {
    return fail(err, kExitConfig, "parse", e.what(), std::nullopt, e.line());
  } catch (const ConfigError& e) {
    return fail(err, kExitConfig, "config", e.what());
  } catch (const InvalidParameter& e) {
    return fail(err, kExitConfig, "invalid_parameter", e.what());
  } catch (const PointError& e) {
    return fail(err, kExitNumerical, "numerical", e.what(), e.point());
  } catch (const NumericalError& e) {
    return fail(err, kExitNumerical, "numerical", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(err, kExitConfig, "io", e.what());
  }
}

}  // namespace lmc::cli
