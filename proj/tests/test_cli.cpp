#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "faselect/cli.hpp"
#include "faselect/core.hpp"
#include "faselect/csv.hpp"
#include "faselect/draws_io.hpp"
#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/pfa.hpp"

using namespace faselect;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("faselect-cli-" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

std::string write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(bool(f));
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  const std::string cmd =
      std::string(FASELECT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

// small full-pipeline configuration used across the file
RunConfig toy_config(const std::string& out_dir) {
  RunConfig cfg = default_config();
  cfg.generation.truth = "harman";
  cfg.generation.p = 8;
  cfg.generation.k0 = 2;
  cfg.generation.n = 60;
  cfg.generation.base_seed = 4100;
  cfg.chain.k = 3;
  cfg.chain.iterations = 400;
  cfg.chain.burnin = 200;
  cfg.chain.seed = 4100;
  cfg.k_max = 3;
  cfg.path_length = 3;
  cfg.quantile = 0.9;
  cfg.out_dir = out_dir;
  cfg.digest = config_digest_of(cfg);
  return cfg;
}

}  // namespace

TEST_CASE("default config validates and digests are stable") {
  RunConfig cfg = default_config();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.digest.size() == 16);
  CHECK(cfg.digest == config_digest_of(cfg));

  RunConfig other = default_config();
  CHECK(other.digest == cfg.digest);

  other.quantile = 0.99;
  CHECK(config_digest_of(other) != cfg.digest);
  other.quantile = cfg.quantile;
  CHECK(config_digest_of(other) == cfg.digest);
}

TEST_CASE("resolved_path expands the dimension range") {
  RunConfig cfg = default_config();
  cfg.k_min = 2;
  cfg.k_max = 4;
  const PathConfig pc = cfg.resolved_path();
  CHECK(pc.k_range == std::vector<std::size_t>({2, 3, 4}));

  cfg.k_max = 0;  // up to the chain dimension
  const PathConfig pc0 = cfg.resolved_path();
  CHECK(pc0.k_range == std::vector<std::size_t>({2, 3, 4, 5}));
}

TEST_CASE("load_config applies values and rejects unknown keys") {
  TempDir tmp;

  RunConfig cfg = load_config(write_text(tmp.sub("good.json"), R"({
    "generation": {"p": 6, "k0": 2, "n": 50, "sigma": 0.3},
    "sampler": {"prior": "plt", "k": 2, "iterations": 300, "burnin": 100},
    "path": {"path_length": 4},
    "summary": {"quantile": 0.9}
  })"));
  CHECK(cfg.generation.p == 6);
  CHECK(cfg.generation.sigma == 0.3);
  CHECK(cfg.prior.family == PriorConfig::Family::plt);
  CHECK(cfg.chain.iterations == 300);
  CHECK(cfg.path_length == 4);
  CHECK(cfg.quantile == 0.9);
  CHECK(cfg.digest == config_digest_of(cfg));

  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("topkey.json"),
      R"({"generation_": 1})")), config_error);
  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("nested.json"),
      R"({"generation": {"pee": 6}})")), config_error);
  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("badval.json"),
      R"({"generation": {"p": "six"}})")), config_error);
  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("badq.json"),
      R"({"summary": {"quantile": 1.5}})")), config_error);
  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("badprior.json"),
      R"({"sampler": {"prior": "horseshoe"}})")), config_error);
  CHECK_THROWS_AS((void)load_config(write_text(tmp.sub("notjson.json"),
      "{nope")), config_error);
  CHECK_THROWS_AS((void)load_config(tmp.sub("missing.json")), io_error);
}

TEST_CASE("simulate writes a coherent replicate directory") {
  TempDir tmp;
  RunConfig cfg = toy_config(tmp.sub("sim"));
  cfg.generation.replicates = 2;
  REQUIRE(cmd_simulate(cfg) == 0);

  for (int r = 0; r < 2; ++r) {
    const std::string dir = tmp.sub("sim") + "/rep" + std::to_string(r);
    const Matrix data = csv::read_dataset(dir + "/data.csv");
    CHECK(data.rows() == 60);
    CHECK(data.cols() == 8);

    // the stored truth must reassemble exactly
    const Matrix b0 = csv::read_matrix(dir + "/truth_b0.csv");
    const Vector s0 = csv::read_vector(dir + "/truth_sigma0.csv");
    const Matrix om = csv::read_matrix(dir + "/truth_omega0.csv");
    CHECK(max_abs_diff(assemble_cov(b0, s0), om) <= 1e-12);
  }

  // distinct replicates use distinct seeds
  const Matrix d0 = csv::read_dataset(tmp.sub("sim") + "/rep0/data.csv");
  const Matrix d1 = csv::read_dataset(tmp.sub("sim") + "/rep1/data.csv");
  CHECK(max_abs_diff(d0, d1) > 0.0);
}

TEST_CASE("sample, fit, and summarize chain together") {
  TempDir tmp;
  RunConfig cfg = toy_config(tmp.sub("run"));
  REQUIRE(cmd_simulate(cfg) == 0);
  const std::string data = tmp.sub("run") + "/rep0/data.csv";

  REQUIRE(cmd_sample(cfg, data) == 0);
  const std::string draws_file = tmp.sub("run") + "/draws.bin";
  PosteriorDraws draws = read_draws(draws_file);
  CHECK(draws.M == 200);
  CHECK(draws.p == 8);
  CHECK(draws.k == 3);

  // sidecar metadata carries the configuration digest
  nlohmann::json meta = nlohmann::json::parse(
      slurp(tmp.sub("run") + "/draws.meta.json"));
  CHECK(meta.at("config_digest").get<std::string>() == cfg.digest);

  REQUIRE(cmd_fit(cfg, draws_file) == 0);
  FitPath path = read_fitpath_json(tmp.sub("run") + "/fitpath.json");
  CHECK(path.p == 8);
  REQUIRE(path.fits.size() == 3 * 4);  // k in 1..3, lambda_0 plus 3 levels
  for (std::size_t k = 1; k <= 3; ++k) {
    bool has_unpenalized = false;
    for (const PenalizedFit& f : path.fits)
      if (f.k_tilde == k && f.lambda_index == 0 && f.lambda == 0.0)
        has_unpenalized = true;
    CHECK(has_unpenalized);
  }
  nlohmann::json fmeta = nlohmann::json::parse(
      slurp(tmp.sub("run") + "/fitpath.meta.json"));
  CHECK(fmeta.at("omega_bar_digest").get<std::string>() ==
        cov_digest(posterior_mean_cov(draws)));

  REQUIRE(cmd_summarize(cfg, draws_file, tmp.sub("run") + "/fitpath.json") == 0);
  nlohmann::json sel = nlohmann::json::parse(
      slurp(tmp.sub("run") + "/selection.json"));
  const std::size_t k_selected = sel.at("k_selected").get<std::size_t>();
  CHECK(k_selected >= 1);
  CHECK(k_selected <= 3);
  CHECK(sel.at("quantile").get<double>() == 0.9);
  CHECK(sel.at("config_digest").get<std::string>() == cfg.digest);

  // a second summarize run reproduces the summary byte for byte
  RunConfig cfg2 = cfg;
  cfg2.out_dir = tmp.sub("run2");
  REQUIRE(cmd_summarize(cfg2, draws_file, tmp.sub("run") + "/fitpath.json") == 0);
  CHECK(slurp(tmp.sub("run") + "/summary.csv") ==
        slurp(tmp.sub("run2") + "/summary.csv"));
  CHECK(slurp(tmp.sub("run") + "/selection.json") ==
        slurp(tmp.sub("run2") + "/selection.json"));
}

TEST_CASE("plt sampling carries its structure through the draws file") {
  TempDir tmp;
  RunConfig cfg = toy_config(tmp.sub("plt"));
  cfg.prior.family = PriorConfig::Family::plt;
  cfg.digest = config_digest_of(cfg);
  REQUIRE(cmd_simulate(cfg) == 0);
  REQUIRE(cmd_sample(cfg, tmp.sub("plt") + "/rep0/data.csv") == 0);

  PosteriorDraws draws = read_draws(tmp.sub("plt") + "/draws.bin");
  for (std::size_t m = 0; m < draws.M; ++m)
    for (std::size_t j = 0; j < draws.k; ++j) {
      CHECK(draws.loadings[m](j, j) > 0.0);
      for (std::size_t q = j + 1; q < draws.k; ++q)
        CHECK(draws.loadings[m](j, q) == 0.0);
    }
}

TEST_CASE("summarize refuses a fit path from different draws") {
  TempDir tmp;
  RunConfig cfg = toy_config(tmp.sub("a"));
  REQUIRE(cmd_simulate(cfg) == 0);
  REQUIRE(cmd_sample(cfg, tmp.sub("a") + "/rep0/data.csv") == 0);
  REQUIRE(cmd_fit(cfg, tmp.sub("a") + "/draws.bin") == 0);

  RunConfig other = cfg;
  other.out_dir = tmp.sub("b");
  other.chain.seed = 9999;
  other.digest = config_digest_of(other);
  REQUIRE(cmd_simulate(other) == 0);
  REQUIRE(cmd_sample(other, tmp.sub("b") + "/rep0/data.csv") == 0);

  CHECK_THROWS_AS(
      (void)cmd_summarize(cfg, tmp.sub("b") + "/draws.bin",
                          tmp.sub("a") + "/fitpath.json"),
      config_error);
}

TEST_CASE("run_bench produces one result per replicate") {
  TempDir tmp;
  RunConfig cfg = default_config();
  cfg.generation.p = 6;
  cfg.generation.k0 = 2;
  cfg.generation.n = 60;
  cfg.generation.sigma = 0.5;
  cfg.generation.replicates = 2;
  cfg.generation.base_seed = 300;
  cfg.chain.k = 3;
  cfg.chain.iterations = 400;
  cfg.chain.burnin = 200;
  cfg.path_length = 0;
  cfg.k_max = 3;
  cfg.out_dir = tmp.sub("bench");
  cfg.digest = config_digest_of(cfg);

  const auto results = run_bench(cfg);
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    CHECK_FALSE(r.failed);
    CHECK(r.seed == 300 + r.index);
    CHECK(r.k_q95 >= 1);
    CHECK(r.k_q95 <= 3);
    CHECK(r.k_q99 >= 1);
    CHECK(r.k_q99 <= 3);
    CHECK(r.rmse_q95 > 0.0);
    CHECK(r.rmse_q99 > 0.0);
  }

  REQUIRE(cmd_bench(cfg) == 0);
  const std::string reps = slurp(tmp.sub("bench") + "/bench_replicates.csv");
  CHECK(reps.find("replicate,seed,failed") != std::string::npos);
  const std::string report = slurp(tmp.sub("bench") + "/bench_report.csv");
  CHECK(report.find("quantile,replicates_ok") != std::string::npos);

  // one data row per benchmark quantile, round-trip formatted
  std::vector<double> quantiles;
  std::istringstream lines(report);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'q') continue;
    quantiles.push_back(std::strtod(line.c_str(), nullptr));
  }
  REQUIRE(quantiles.size() == 2);
  CHECK(quantiles[0] == 0.95);
  CHECK(quantiles[1] == 0.99);
}

TEST_CASE("binary exit codes distinguish failure classes") {
  TempDir tmp;

  CHECK(run_binary("version") == 0);
  CHECK(run_binary("--help") == 0);

  // configuration problems exit with 2
  write_text(tmp.sub("bad.json"), R"({"no_such_key": 1})");
  CHECK(run_binary("simulate --config " + tmp.sub("bad.json") + " --out " +
                   tmp.sub("x")) == 2);
  CHECK(run_binary("definitely-not-a-subcommand") == 2);

  // missing input files exit with 4
  CHECK(run_binary("fit " + tmp.sub("absent.bin") + " --out " + tmp.sub("y")) ==
        4);
  CHECK(run_binary("sample " + tmp.sub("absent.csv") + " --out " + tmp.sub("y")) ==
        4);

  // numerical breakdown exits with 3: loadings so large that the implied
  // covariance overflows and fails the positive-definiteness check
  PosteriorDraws huge;
  huge.p = 2;
  huge.k = 1;
  huge.M = 1;
  huge.provenance = "test";
  Matrix b(2, 1);
  b(0, 0) = 1e200;
  b(1, 0) = 1e200;
  huge.loadings = {b};
  huge.uniqueness = {{1.0, 1.0}};
  write_draws(huge, tmp.sub("huge.bin"));
  CHECK(run_binary("fit " + tmp.sub("huge.bin") + " --out " + tmp.sub("z") +
                   " --k 1") == 3);
}
