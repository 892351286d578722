#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "faselect/gibbs.hpp"
#include "faselect/pfa.hpp"

namespace faselect {

struct GenerationConfig {
  std::size_t p = 15;
  std::size_t k0 = 3;
  std::size_t n = 100;
  double sigma = 0.5;        // isotropic uniqueness scale for random truths
  std::string dist = "normal";  // normal | t
  double nu = 10.0;
  std::size_t replicates = 1;
  std::uint64_t base_seed = 1;
  std::string truth = "random_plt";  // random_plt | harman

  void validate() const;
};

struct RunConfig {
  GenerationConfig generation;
  PriorConfig prior;
  ChainConfig chain;
  std::size_t k_min = 1;  // fit dimension range; k_max 0 means "up to chain.k"
  std::size_t k_max = 0;
  std::size_t path_length = 10;
  double tol = 1e-8;
  std::size_t max_iter = 2000;
  double uniqueness_floor = 1e-6;
  std::size_t restarts = 1;
  double quantile = 0.95;
  std::string out_dir = "out";
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::string digest;       // of the resolved configuration

  void validate() const;
  PathConfig resolved_path() const;  // k_range expanded, k_max 0 -> chain.k
};

// defaults when no --config file is given
RunConfig default_config();

// parse a JSON config file; unknown keys rejected, digest filled in
RunConfig load_config(const std::string& file);

// recompute the digest from the resolved fields (canonical JSON, FNV-1a)
std::string config_digest_of(const RunConfig& cfg);

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::size_t k_q95 = 0;
  std::size_t k_q99 = 0;
  double rmse_q95 = 0.0;
  double rmse_q99 = 0.0;
};

// simulate -> sample -> fit -> summarize at both benchmark quantiles,
// one independent substream per replicate; failures recorded, not dropped
std::vector<ReplicateResult> run_bench(const RunConfig& cfg);

int cmd_simulate(const RunConfig& cfg);
int cmd_sample(const RunConfig& cfg, const std::string& data_path);
int cmd_fit(const RunConfig& cfg, const std::string& draws_path);
int cmd_summarize(const RunConfig& cfg, const std::string& draws_path,
                  const std::string& fitpath_path);
int cmd_bench(const RunConfig& cfg);
int cmd_version();

}  // namespace faselect
