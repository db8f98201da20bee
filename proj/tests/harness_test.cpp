#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "dygauss/dygauss.hpp"
#include "oracles.hpp"

using namespace dygauss;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

const std::string cli = env_or("DYGAUSS_CLI", DYGAUSS_TEST_CLI);
const fs::path data = env_or("DYGAUSS_DATA", DYGAUSS_TEST_DATA);

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dygauss_harness_" + std::to_string(::getpid())) / name;
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" + cli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json run_json(const std::string& args) {
  const fs::path out = scratch("json") / "out.json";
  EXPECT_EQ(run(args + " --out '" + out.string() + "'"), 0) << args;
  std::ifstream in(out);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string table(const std::string& name) { return "'" + (data / name).string() + "'"; }

}  // namespace

TEST(CliApprox, TwoCellTable) {
  const json j = run_json("approx --table " + table("two_cells.csv") + " --prior 1");
  const double mu = oracle::digamma_series(2) - oracle::digamma_series(4);
  const double var = oracle::trigamma_series(2) + oracle::trigamma_series(4);
  EXPECT_NEAR(j["approximation"]["mean"][0].get<double>(), mu, 1e-10);
  const auto& cov = j["approximation"]["cov"];
  EXPECT_NEAR(cov["diag"][0].get<double>() + cov["common"].get<double>(), var, 1e-10);
  EXPECT_TRUE(j["kl_bound"]["valid"].get<bool>());
  EXPECT_LT(j["exact_min_kl"].get<double>(), j["kl_bound"]["value"].get<double>());
  EXPECT_EQ(j["intervals"].size(), 1u);
}

TEST(CliApprox, EmptyTableReturnsPrior) {
  const json j = run_json("approx --table " + table("empty_2x2.csv") + " --prior 1");
  EXPECT_EQ(j["beta"], json::array({1.0, 1.0, 1.0, 1.0}));
  for (const auto& m : j["approximation"]["mean"]) EXPECT_EQ(m.get<double>(), 0.0);
}

TEST(CliApprox, CornerLabelsFollowCellOrder) {
  const json j = run_json("approx --table " + table("example_2x2x2.json") + " --parametrization corner");
  EXPECT_EQ(j["approximation"]["labels"], json::array({"001", "010", "011", "100", "101", "110", "111"}));
  EXPECT_EQ(j["approximation"]["cov"]["type"], "dense");
  EXPECT_EQ(j["intervals"][2]["label"], "011");
}

TEST(CliExitCodes, InputErrors) {
  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.csv") << "a,count\n0,x\n";
  EXPECT_EQ(run("approx --table '" + (dir / "bad.csv").string() + "'"), 2);
  EXPECT_EQ(run("approx --table '" + (dir / "nope.csv").string() + "'"), 2);
  EXPECT_EQ(run("approx --table " + table("two_cells.csv") + " --prior 0"), 2);
  EXPECT_EQ(run("approx --table " + table("two_cells.csv") + " --prior -1"), 2);
  EXPECT_EQ(run("approx --table " + table("two_cells.csv") + " --parametrization effects"), 2);
  EXPECT_EQ(run("select --table " + table("strong_2x2.csv") + " --alpha 0.1 --marginals 3"), 2);
  EXPECT_EQ(run("select --table " + table("strong_2x2.csv")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--help"), 0);
  std::ofstream(dir / "cfg.json") << "{\"p\": 3, \"N\": [], \"a\": [1]}";
  EXPECT_EQ(run("compare --config '" + (dir / "cfg.json").string() + "'"), 2);
}

TEST(CliSelect, InteractionKeptOrDropped) {
  const json strong = run_json("select --table " + table("strong_2x2.csv") + " --alpha 0.1");
  const json indep = run_json("select --table " + table("independent_2x2.csv") + " --alpha 0.1");
  auto has_11 = [](const json& j) {
    for (const auto& s : j["tables"][0]["selection"]["support"])
      if (s == "11") return true;
    return false;
  };
  EXPECT_TRUE(has_11(strong));
  EXPECT_FALSE(has_11(indep));
}

TEST(CliSelect, MarginalsWithReference) {
  const json j = run_json("select --table " + table("synthetic_8var.csv") + " --alpha 0.1 --marginals 4 --reference " +
                          table("reference_graph.txt"));
  EXPECT_EQ(j["tables"].size(), 70u);
  const auto& c = j["confusion"];
  EXPECT_EQ(c["tp"].get<int>() + c["fp"].get<int>() + c["tn"].get<int>() + c["fn"].get<int>(), 420);
  EXPECT_GE(c["f1"].get<double>(), 0.0);
  EXPECT_LE(c["f1"].get<double>(), 1.0);
}

TEST(CliCompare, WritesCsvs) {
  const fs::path dir = scratch("compare");
  std::ofstream(dir / "cfg.json") << R"({"p": 3, "N": [100], "a": [1], "mc": [200], "replicates": 2, "seed": 3,
                                        "ks_coordinates": 2, "timing_runs": 1})";
  ASSERT_EQ(run("compare --config '" + (dir / "cfg.json").string() + "' --output-dir '" + dir.string() + "'"), 0);
  for (const char* f : {"metrics.csv", "summary.csv", "ks.csv", "timings.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "metrics.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, MetricReport::csv_header);
}

// Same config and seed must give byte-identical artifacts for any pool size.
TEST(Determinism, SameSeedSameBytesAcrossThreadCounts) {
  const fs::path dir = scratch("det");
  std::ofstream(dir / "cfg.json") << R"({"p": 3, "N": [50, 400], "a": [1, "1/d"], "mc": [300, 2000],
                                        "replicates": 6, "seed": 11, "ks_coordinates": 3, "timing_runs": 1})";
  const std::string cfg = " compare --config '" + (dir / "cfg.json").string() + "' --output-dir ";
  for (const char* sub : {"a", "b", "c"}) fs::create_directories(dir / sub);
  ASSERT_EQ(run(cfg + "'" + (dir / "a").string() + "'", "DYGAUSS_THREADS=1"), 0);
  ASSERT_EQ(run(cfg + "'" + (dir / "b").string() + "'", "DYGAUSS_THREADS=1"), 0);
  ASSERT_EQ(run(cfg + "'" + (dir / "c").string() + "'", "DYGAUSS_THREADS=4"), 0);
  for (const char* f : {"metrics.csv", "summary.csv", "ks.csv"}) {
    const std::string a = slurp(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
    EXPECT_EQ(a, slurp(dir / "c" / f)) << f;
  }
}

TEST(Determinism, SeedChangesOutput) {
  SimulationConfig cfg;
  cfg.levels = {2, 2};
  cfg.n = {100};
  cfg.priors = {PriorSpec{}};
  cfg.replicates = 3;
  cfg.timing_runs = 1;
  cfg.seed = 1;
  const StudyResult a = run_study(cfg);
  cfg.seed = 2;
  const StudyResult b = run_study(cfg);
  EXPECT_NE(a.metrics.front().value, b.metrics.front().value);
}

TEST(SimulationConfig, ParsesAndValidates) {
  const SimulationConfig c = SimulationConfig::from_json(json::parse(R"({"p": 8, "N": [250], "a": [1, "1/d"]})"));
  EXPECT_EQ(c.levels.size(), 8u);
  EXPECT_EQ(c.priors[1].kind, PriorSpec::Kind::one_over_d);
  EXPECT_EQ(c.replicates, 100);
  EXPECT_THROW(SimulationConfig::from_json(json::parse(R"({"p": 8, "N": [0], "a": [1]})")), InputError);
  EXPECT_THROW(SimulationConfig::from_json(json::parse(R"({"p": 8, "N": [10], "a": [-1]})")), InputError);
  EXPECT_THROW(SimulationConfig::from_json(json::parse(R"({"p": 8, "N": [10], "a": ["1/p"]})")), InputError);
  EXPECT_THROW(SimulationConfig::from_json(json::parse(R"({"N": [10], "a": [1]})")), InputError);
  EXPECT_THROW(SimulationConfig::from_json(json::parse(R"([1, 2])")), InputError);
}

TEST(SimulationDraws, TruthIsLogOdds) {
  RngStream rng(5, 0);
  const detail::ReplicateData r = detail::draw_replicate(DirichletParams::symmetric(8, 1.0), 250, rng);
  // beta = alpha + y, so the counts add back to N.
  EXPECT_NEAR(r.beta.total(), 8.0 + 250.0, 1e-9);
  EXPECT_EQ(r.theta0.size(), 7);
  EXPECT_TRUE(r.theta0.allFinite());
}

TEST(WorkerPool, ThreadCapFromEnvironment) {
  ::setenv("DYGAUSS_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::setenv("DYGAUSS_THREADS", "0", 1);
  EXPECT_GE(worker_count(), 1u);
  ::unsetenv("DYGAUSS_THREADS");
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }, 3),
               std::runtime_error);
}

TEST(Timing, OptimalGaussianAtD255IsFast) {
  const DirichletParams beta(Vector::LinSpaced(256, 1.0, 40.0));
  optimal_gaussian(beta);
  const auto t0 = std::chrono::steady_clock::now();
  const GaussianApprox g = optimal_gaussian(beta);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(g.mean.size(), 255);
  EXPECT_LT(secs, 0.05);
}
