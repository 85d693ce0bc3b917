#include "lmc/config.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace lmc {

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::kLocalMesh: return "local_mesh";
    case SolverMethod::kDiffusionMap: return "dm";
    case SolverMethod::kReference: return "reference";
  }
  return "local_mesh";
}

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "local_mesh" || name == "lm") return SolverMethod::kLocalMesh;
  if (name == "dm" || name == "diffusion_map") return SolverMethod::kDiffusionMap;
  if (name == "reference") return SolverMethod::kReference;
  throw ConfigError("unknown solver method '" + name + "' (expected local_mesh, dm or reference)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "seed",
      "potential.kind", "potential.beta", "potential.rugged_gamma", "potential.rugged_k", "potential.flat_dim",
      "potential.shift",
      "regions.a", "regions.b",
      "sampler.dt", "sampler.n_snapshots", "sampler.stride", "sampler.burn_in", "sampler.x0", "sampler.box_lo",
      "sampler.box_hi",
      "noise.ambient_dim", "noise.gamma",
      "mesh.k", "mesh.d", "mesh.symmetrization", "mesh.on_failure",
      "solver.method", "solver.disconnected", "solver.gradients",
      "dm.epsilon", "dm.truncation", "dm.adaptive", "dm.alpha", "dm.adaptive_k",
      "reference.lo", "reference.hi", "reference.nodes", "reference.file",
      "input.points", "input.generating", "output.dir",
      "trace.start", "trace.max_steps", "trace.min_step", "trace.reverse", "trace.k", "trace.degree",
      "mc.x0", "mc.n_paths", "mc.dt", "mc.max_steps",
      "compare.repeats", "compare.grid",
  };
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    return parse_double(key, t.substr(0, slash)) / parse_double(key, t.substr(slash + 1));
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size()) throw ConfigError("key '" + key + "': '" + text + "' is not an integer");
  return v;
}

std::uint64_t parse_seed(const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (t.empty() || t[0] == '-' || end != t.c_str() + t.size()) {
    throw ConfigError("key 'seed': '" + text + "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("key '" + key + "': '" + text + "' is not a boolean");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "' needs at least one value");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
  return s;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

std::string number(double v) { return std::isinf(v) ? "inf" : format_double(v); }

void apply_kind_defaults(ExperimentConfig& c) {
  switch (c.potential.kind) {
    case PotentialKind::kDoubleWell1d:
      c.potential.beta = 1.0;
      c.region_a = "x in [-1,-0.9]";
      c.region_b = "x in [0.9,1]";
      c.sampler.dt = 1e-3;
      c.sampler.n_snapshots = 1000;
      c.sampler.stride = 100;
      c.sampler.x0 = {-1.0};
      c.sampler.box_lo = {-1.0};
      c.sampler.box_hi = {1.0};
      c.reference_lo = {-1.0};
      c.reference_hi = {1.0};
      c.reference_nodes = {4001};
      c.mesh.dim = 1;
      c.trace.dim = 1;
      break;
    case PotentialKind::kMueller:
    case PotentialKind::kRuggedMueller:
      c.potential.beta = 1.0 / 22.0;
      c.region_a = "U<-120 & y>0.75";
      c.region_b = "U<-82 & y<0.35";
      c.sampler.dt = 2e-5;
      c.sampler.n_snapshots = 45350;
      c.sampler.stride = 500;
      c.sampler.x0 = {-0.56, 1.44};
      c.sampler.box_lo = {-1.5, -0.5};
      c.sampler.box_hi = {1.0, 2.0};
      c.reference_lo = {-1.5, -0.5};
      c.reference_hi = {1.0, 2.0};
      c.reference_nodes = {512, 512};
      c.mesh.dim = 2;
      c.trace.dim = 2;
      break;
    case PotentialKind::kFlat: {
      const int d = c.potential.flat_dim;
      c.potential.beta = 1.0;
      c.region_a = "x in [0,0.1]";
      c.region_b = "x in [0.9,1]";
      c.sampler.dt = 1e-4;
      c.sampler.n_snapshots = 2000;
      c.sampler.stride = 10;
      c.sampler.x0 = std::vector<double>(static_cast<std::size_t>(d), 0.5);
      c.sampler.box_lo = std::vector<double>(static_cast<std::size_t>(d), 0.0);
      c.sampler.box_hi = std::vector<double>(static_cast<std::size_t>(d), 1.0);
      c.reference_lo = c.sampler.box_lo;
      c.reference_hi = c.sampler.box_hi;
      c.reference_nodes = d == 1 ? std::vector<Index>{2001} : std::vector<Index>{129, 129};
      c.mesh.dim = d;
      c.trace.dim = d;
      break;
    }
  }
}

}  // namespace

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ConfigError("this subcommand is stochastic and needs 'seed'");
  return *seed;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value' in '" + path + "'", number);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("empty key in '" + path + "'", number);
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

ExperimentConfig make_config(const std::map<std::string, std::string>& values) {
  const auto& keys = config_keys();
  for (const auto& [k, v] : values) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) throw ConfigError("unknown config key '" + k + "'");
  }
  // An empty value means "unset", so resolved configs read back unchanged.
  const auto get = [&](const std::string& k) -> const std::string* {
    const auto it = values.find(k);
    return it == values.end() || trim(it->second).empty() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  if (const auto* v = get("potential.kind")) c.potential.kind = potential_kind_from_string(trim(*v));
  if (const auto* v = get("potential.flat_dim")) c.potential.flat_dim = static_cast<int>(parse_int("potential.flat_dim", *v));
  if (c.potential.flat_dim < 1 || c.potential.flat_dim > 2) throw ConfigError("potential.flat_dim must be 1 or 2");
  apply_kind_defaults(c);

  if (const auto* v = get("seed")) c.seed = parse_seed(*v);
  if (const auto* v = get("potential.beta")) c.potential.beta = parse_double("potential.beta", *v);
  if (!(c.potential.beta > 0.0)) throw ConfigError("potential.beta must be positive");
  if (const auto* v = get("potential.rugged_gamma")) c.potential.rugged_gamma = parse_double("potential.rugged_gamma", *v);
  if (const auto* v = get("potential.rugged_k")) c.potential.rugged_k = parse_double("potential.rugged_k", *v);
  if (const auto* v = get("potential.shift")) c.potential.energy_shift = parse_double("potential.shift", *v);
  if (const auto* v = get("regions.a")) c.region_a = trim(*v);
  if (const auto* v = get("regions.b")) c.region_b = trim(*v);
  RegionSpec::parse(c.region_a);
  RegionSpec::parse(c.region_b);

  if (const auto* v = get("sampler.dt")) c.sampler.dt = parse_double("sampler.dt", *v);
  if (const auto* v = get("sampler.n_snapshots")) c.sampler.n_snapshots = parse_int("sampler.n_snapshots", *v);
  if (const auto* v = get("sampler.stride")) c.sampler.stride = parse_int("sampler.stride", *v);
  if (const auto* v = get("sampler.burn_in")) c.sampler.burn_in = parse_int("sampler.burn_in", *v);
  if (const auto* v = get("sampler.x0")) c.sampler.x0 = parse_list("sampler.x0", *v);
  if (const auto* v = get("sampler.box_lo")) c.sampler.box_lo = parse_list("sampler.box_lo", *v);
  if (const auto* v = get("sampler.box_hi")) c.sampler.box_hi = parse_list("sampler.box_hi", *v);
  if (!(c.sampler.dt > 0.0) || c.sampler.n_snapshots < 1 || c.sampler.stride < 1 || c.sampler.burn_in < 0) {
    throw ConfigError("sampler needs dt > 0, n_snapshots >= 1, stride >= 1 and burn_in >= 0");
  }

  if (const auto* v = get("noise.ambient_dim")) c.noise_ambient_dim = static_cast<int>(parse_int("noise.ambient_dim", *v));
  if (const auto* v = get("noise.gamma")) c.noise_gamma = parse_double("noise.gamma", *v);
  if (c.noise_gamma < 0.0 || c.noise_ambient_dim < 0) throw ConfigError("noise settings must be non-negative");

  if (const auto* v = get("mesh.k")) c.mesh.k = parse_int("mesh.k", *v);
  if (c.mesh.k < 0) throw ConfigError("mesh.k must be non-negative");
  if (const auto* v = get("mesh.d")) {
    if (trim(*v) == "auto") {
      c.mesh.dim.reset();
    } else {
      c.mesh.dim = static_cast<int>(parse_int("mesh.d", *v));
      if (*c.mesh.dim != 1 && *c.mesh.dim != 2) throw ConfigError("mesh.d must be 1, 2 or auto");
      c.trace.dim = *c.mesh.dim;
    }
  }
  if (const auto* v = get("mesh.symmetrization")) c.symmetrization = symmetrization_from_string(trim(*v));
  if (const auto* v = get("mesh.on_failure")) {
    const std::string t = trim(*v);
    if (t == "abort") {
      c.mesh.on_failure = FailurePolicy::kAbort;
    } else if (t == "isolate") {
      c.mesh.on_failure = FailurePolicy::kIsolate;
    } else {
      throw ConfigError("mesh.on_failure must be abort or isolate");
    }
  }
  if (const auto* v = get("solver.method")) c.method = solver_method_from_string(trim(*v));
  if (const auto* v = get("solver.disconnected")) c.disconnected = disconnected_policy_from_string(trim(*v));
  if (const auto* v = get("solver.gradients")) c.gradients = parse_bool("solver.gradients", *v);

  if (const auto* v = get("dm.epsilon")) {
    if (trim(*v) == "auto") {
      c.dm.epsilon.reset();
    } else {
      c.dm.epsilon = parse_double("dm.epsilon", *v);
      if (!(*c.dm.epsilon > 0.0)) throw ConfigError("dm.epsilon must be positive or auto");
    }
  }
  if (const auto* v = get("dm.truncation")) c.dm.truncation = parse_double("dm.truncation", *v);
  if (c.dm.truncation < 0.0 || c.dm.truncation >= 1.0) throw ConfigError("dm.truncation must lie in [0, 1)");
  if (const auto* v = get("dm.adaptive")) c.dm.adaptive = parse_bool("dm.adaptive", *v);
  if (const auto* v = get("dm.alpha")) c.dm.adaptive_alpha = parse_double("dm.alpha", *v);
  if (const auto* v = get("dm.adaptive_k")) c.dm.adaptive_k = parse_int("dm.adaptive_k", *v);

  if (const auto* v = get("reference.lo")) c.reference_lo = parse_list("reference.lo", *v);
  if (const auto* v = get("reference.hi")) c.reference_hi = parse_list("reference.hi", *v);
  if (const auto* v = get("reference.nodes")) {
    c.reference_nodes.clear();
    for (double x : parse_list("reference.nodes", *v)) c.reference_nodes.push_back(static_cast<Index>(x));
  }
  if (c.reference_lo.size() != c.reference_hi.size() || c.reference_lo.size() != c.reference_nodes.size()) {
    throw ConfigError("reference.lo, reference.hi and reference.nodes must have the same length");
  }
  if (const auto* v = get("reference.file")) c.reference_file = trim(*v);
  if (const auto* v = get("input.points")) c.input_points = trim(*v);
  if (const auto* v = get("input.generating")) c.input_generating = trim(*v);
  if (const auto* v = get("output.dir")) c.output_dir = trim(*v);
  for (const std::string* f : {&c.reference_file, &c.input_points, &c.input_generating}) {
    if (!f->empty() && *f != "auto" && !std::ifstream(*f)) throw ConfigError("file '" + *f + "' does not exist");
  }

  if (const auto* v = get("trace.start")) c.trace_start = parse_list("trace.start", *v);
  if (const auto* v = get("trace.max_steps")) c.trace.max_steps = parse_int("trace.max_steps", *v);
  if (const auto* v = get("trace.min_step")) c.trace.min_step = parse_double("trace.min_step", *v);
  if (const auto* v = get("trace.reverse")) c.trace.reverse = parse_bool("trace.reverse", *v);
  if (const auto* v = get("trace.k")) c.trace.k = parse_int("trace.k", *v);
  if (const auto* v = get("trace.degree")) c.trace.degree = static_cast<int>(parse_int("trace.degree", *v));

  if (const auto* v = get("mc.x0")) c.mc_x0 = parse_list("mc.x0", *v);
  if (const auto* v = get("mc.n_paths")) c.mc.n_paths = parse_int("mc.n_paths", *v);
  if (const auto* v = get("mc.dt")) c.mc.dt = parse_double("mc.dt", *v);
  if (const auto* v = get("mc.max_steps")) c.mc.max_steps = parse_int("mc.max_steps", *v);

  if (const auto* v = get("compare.repeats")) c.compare_repeats = static_cast<int>(parse_int("compare.repeats", *v));
  if (const auto* v = get("compare.grid")) c.compare_grid = parse_int("compare.grid", *v);
  if (c.compare_repeats < 1 || c.compare_grid < 2) throw ConfigError("compare.repeats >= 1 and compare.grid >= 2 required");
  return c;
}

std::map<std::string, std::string> ExperimentConfig::resolved() const {
  std::map<std::string, std::string> m;
  m["seed"] = seed ? std::to_string(*seed) : "none";
  m["potential.kind"] = to_string(potential.kind);
  m["potential.beta"] = number(potential.beta);
  m["potential.rugged_gamma"] = format_double(potential.rugged_gamma);
  m["potential.rugged_k"] = format_double(potential.rugged_k);
  m["potential.flat_dim"] = std::to_string(potential.flat_dim);
  m["potential.shift"] = format_double(potential.energy_shift);
  m["regions.a"] = region_a;
  m["regions.b"] = region_b;
  m["sampler.dt"] = format_double(sampler.dt);
  m["sampler.n_snapshots"] = std::to_string(sampler.n_snapshots);
  m["sampler.stride"] = std::to_string(sampler.stride);
  m["sampler.burn_in"] = std::to_string(sampler.burn_in);
  m["sampler.x0"] = join(sampler.x0);
  m["sampler.box_lo"] = join(sampler.box_lo);
  m["sampler.box_hi"] = join(sampler.box_hi);
  m["noise.ambient_dim"] = std::to_string(noise_ambient_dim);
  m["noise.gamma"] = format_double(noise_gamma);
  m["mesh.k"] = std::to_string(mesh.k);
  m["mesh.d"] = mesh.dim ? std::to_string(*mesh.dim) : "auto";
  m["mesh.symmetrization"] = to_string(symmetrization);
  m["mesh.on_failure"] = mesh.on_failure == FailurePolicy::kAbort ? "abort" : "isolate";
  m["solver.method"] = to_string(method);
  m["solver.disconnected"] = to_string(disconnected);
  m["solver.gradients"] = gradients ? "true" : "false";
  m["dm.epsilon"] = dm.epsilon ? format_double(*dm.epsilon) : "auto";
  m["dm.truncation"] = format_double(dm.truncation);
  m["dm.adaptive"] = dm.adaptive ? "true" : "false";
  m["dm.alpha"] = format_double(dm.adaptive_alpha);
  m["dm.adaptive_k"] = std::to_string(dm.adaptive_k);
  m["reference.lo"] = join(reference_lo);
  m["reference.hi"] = join(reference_hi);
  m["reference.nodes"] = join(reference_nodes);
  m["reference.file"] = reference_file;
  m["input.points"] = input_points;
  m["input.generating"] = input_generating;
  m["output.dir"] = output_dir;
  m["trace.start"] = join(trace_start);
  m["trace.max_steps"] = std::to_string(trace.max_steps);
  m["trace.min_step"] = format_double(trace.min_step);
  m["trace.reverse"] = trace.reverse ? "true" : "false";
  m["trace.k"] = std::to_string(trace.k);
  m["trace.degree"] = std::to_string(trace.degree);
  m["mc.x0"] = join(mc_x0);
  m["mc.n_paths"] = std::to_string(mc.n_paths);
  m["mc.dt"] = format_double(mc.dt);
  m["mc.max_steps"] = std::to_string(mc.max_steps);
  m["compare.repeats"] = std::to_string(compare_repeats);
  m["compare.grid"] = std::to_string(compare_grid);
  return m;
}

}  // namespace lmc
