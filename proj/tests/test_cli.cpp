#include "cli.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run lmc_run(std::vector<std::string> args) {
  args.insert(args.begin(), "lmc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = lmc::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path kData = LMC_DATA_DIR;

}  // namespace

TEST_CASE("unknown subcommand") {
  auto dir = lmc::test::scratch_dir("cli_unknown");
  auto r = lmc_run({"bogus", "-o", dir.string()});
  CHECK(r.code == lmc::cli::kExitConfig);
  CHECK(json::parse(r.err)["exit_code"] == 2);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("solve on the bundled double-well fixture") {
  auto dir = lmc::test::scratch_dir("cli_fixture");
  auto r = lmc_run({"solve", "-c", (kData / "double_well_uniform" / "solve.conf").string(), "-p",
                    (kData / "double_well_uniform" / "points.csv").string(), "-o", dir.string()});
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(dir / "metrics.json"));
  CHECK(j["E_q"].get<double>() <= 1e-6);
  CHECK(j["energy_source"] == "points");
  CHECK(j["n"] == 1000);
  CHECK(j["subcommand"] == "solve");
  CHECK(j["config"]["reference.nodes"] == "1000");
  CHECK(fs::exists(dir / "q.csv"));
  CHECK(slurp(dir / "q.csv").rfind("# lmc solve\n", 0) == 0);
}

TEST_CASE("sample, connect, solve, trace reproduce byte for byte") {
  auto dir = lmc::test::scratch_dir("cli_rerun");
  const auto pts = (dir / "points.csv").string();
  const std::vector<std::string> files{"points.csv", "connectivity.txt", "q.csv", "gradient.csv", "trace.csv"};
  std::vector<std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    REQUIRE(lmc_run({"sample", "--seed", "4", "-s", "sampler.n_snapshots=400", "-o", dir.string()}).code == 0);
    REQUIRE(lmc_run({"connect", "-p", pts, "-o", dir.string()}).code == 0);
    REQUIRE(lmc_run({"solve", "-p", pts, "-o", dir.string(), "-s", "solver.gradients=true"}).code == 0);
    REQUIRE(lmc_run({"trace", "-p", pts, "-o", dir.string(), "--start", "-0.5"}).code == 0);
    for (std::size_t f = 0; f < files.size(); ++f) {
      const std::string text = slurp(dir / files[f]);
      INFO(files[f]);
      CHECK(text.find("# seed=") != std::string::npos);
      CHECK(text.find("# potential.kind=double_well") != std::string::npos);
      if (pass == 0) {
        first.push_back(text);
      } else {
        CHECK(text == first[f]);
      }
    }
  }
  CHECK(slurp(dir / "points.csv").find("# seed=4\n") != std::string::npos);
}

TEST_CASE("stochastic subcommands need a seed") {
  auto dir = lmc::test::scratch_dir("cli_seed");
  auto r = lmc_run({"sample", "-o", dir.string()});
  CHECK(r.code == lmc::cli::kExitConfig);
  CHECK(json::parse(r.err)["error"]["kind"] == "config");
  CHECK_FALSE(fs::exists(dir / "points.csv"));
}

TEST_CASE("config errors carry line numbers") {
  auto dir = lmc::test::scratch_dir("cli_parse");
  {
    std::ofstream f(dir / "bad.conf");
    f << "seed = 1\n\nthis line is wrong\n";
  }
  auto r = lmc_run({"sample", "-c", (dir / "bad.conf").string(), "-o", dir.string()});
  CHECK(r.code == lmc::cli::kExitConfig);
  auto e = json::parse(r.err);
  CHECK(e["error"]["kind"] == "parse");
  CHECK(e["error"]["line"] == 3);
}

TEST_CASE("numerical failures exit with 3") {
  auto dir = lmc::test::scratch_dir("cli_numerical");
  auto r = lmc_run({"solve", "-p", (kData / "double_well_uniform" / "points.csv").string(), "-o", dir.string(),
                    "--method", "dm", "--epsilon", "1e-9"});
  CHECK(r.code == lmc::cli::kExitNumerical);
  auto e = json::parse(r.err);
  CHECK(e["error"]["kind"] == "numerical");
  CHECK(e["error"].contains("point"));
  CHECK_FALSE(fs::exists(dir / "q.csv"));
  CHECK_FALSE(fs::exists(dir / "metrics.json"));
}

TEST_CASE("reference and rate") {
  auto dir = lmc::test::scratch_dir("cli_reference");
  auto ref = lmc_run({"reference", "-o", dir.string(), "-s", "reference.nodes=1001"});
  REQUIRE(ref.code == 0);
  CHECK(fs::exists(dir / "reference_grid.csv"));
  auto rate = lmc_run({"rate", "-p", (kData / "double_well_uniform" / "points.csv").string(), "-o", dir.string(),
                       "--reference", (dir / "reference_grid.csv").string()});
  REQUIRE(rate.code == 0);
  auto j = json::parse(rate.out);
  CHECK(j["E_nuR"].get<double>() < 5e-3);  // 1000 points against 1001 nodes
  CHECK_FALSE(fs::exists(dir / "q.csv"));
}

TEST_CASE("compare reports both solvers") {
  auto dir = lmc::test::scratch_dir("cli_compare");
  auto r = lmc_run({"compare", "--seed", "1", "-o", dir.string(), "-s", "compare.repeats=3", "-s",
                    "sampler.n_snapshots=1000", "-s", "reference.nodes=1001"});
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(dir / "metrics.json"));
  REQUIRE(j["runs"].size() == 3);
  CHECK(j["runs"][0]["seed"] == 1);
  CHECK(j["runs"][2]["seed"] == 3);
  CHECK(j["spread"]["local_mesh"].get<double>() < j["spread"]["dm"].get<double>());
}
