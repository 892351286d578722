#include "faselect/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "faselect/csv.hpp"
#include "faselect/datagen.hpp"
#include "faselect/draws_io.hpp"
#include "faselect/errors.hpp"
#include "faselect/simd/kernels.hpp"
#include "faselect/summary.hpp"

namespace faselect {

namespace fs = std::filesystem;
using nlohmann::json;

void GenerationConfig::validate() const {
  if (p < 1 || k0 < 1 || k0 > p)
    throw config_error("generation: need 1 <= k0 <= p");
  if (n < 2) throw config_error("generation: n must be >= 2");
  if (replicates < 1) throw config_error("generation: replicates must be >= 1");
  if (dist != "normal" && dist != "t")
    throw config_error("generation: dist must be 'normal' or 't'");
  if (dist == "t" && !(nu > 2.0))
    throw config_error("generation: nu must exceed 2");
  if (truth != "random_plt" && truth != "harman")
    throw config_error("generation: truth must be 'random_plt' or 'harman'");
  if (truth == "random_plt" && !(sigma > 0.0))
    throw config_error("generation: sigma must be positive");
  if (truth == "harman" && (p != 8 || k0 != 2))
    throw config_error("generation: the harman truth fixes p=8, k0=2");
}

void RunConfig::validate() const {
  generation.validate();
  prior.validate();
  chain.validate();
  if (k_min < 1) throw config_error("path: k_min must be >= 1");
  if (k_max != 0 && k_max < k_min)
    throw config_error("path: k_max must be >= k_min");
  if (!(quantile > 0.0) || !(quantile < 1.0))
    throw config_error("summary: quantile must lie inside (0,1)");
  resolved_path().validate();
}

PathConfig RunConfig::resolved_path() const {
  PathConfig pc;
  const std::size_t hi = k_max == 0 ? chain.k : k_max;
  for (std::size_t k = k_min; k <= hi; ++k) pc.k_range.push_back(k);
  pc.path_length = path_length;
  pc.tol = tol;
  pc.max_iter = max_iter;
  pc.uniqueness_floor = uniqueness_floor;
  pc.restarts = restarts;
  return pc;
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.chain.k = 5;
  cfg.chain.iterations = 6000;
  cfg.chain.burnin = 3000;
  cfg.chain.seed = cfg.generation.base_seed;
  cfg.digest = config_digest_of(cfg);
  return cfg;
}

namespace {

json config_to_json(const RunConfig& c) {
  json j;
  j["generation"] = {{"p", c.generation.p},
                     {"k0", c.generation.k0},
                     {"n", c.generation.n},
                     {"sigma", c.generation.sigma},
                     {"dist", c.generation.dist},
                     {"nu", c.generation.nu},
                     {"replicates", c.generation.replicates},
                     {"base_seed", c.generation.base_seed},
                     {"truth", c.generation.truth}};
  j["sampler"] = {
      {"prior", c.prior.family == PriorConfig::Family::plt ? "plt"
                                                           : "unconstrained"},
      {"loading_shape", c.prior.loading_shape},
      {"loading_scale", c.prior.loading_scale},
      {"uniqueness_shape", c.prior.uniqueness_shape},
      {"uniqueness_scale", c.prior.uniqueness_scale},
      {"k", c.chain.k},
      {"iterations", c.chain.iterations},
      {"burnin", c.chain.burnin},
      {"thin", c.chain.thin},
      {"seed", c.chain.seed}};
  j["path"] = {{"k_min", c.k_min},
               {"k_max", c.k_max},
               {"path_length", c.path_length},
               {"tol", c.tol},
               {"max_iter", c.max_iter},
               {"uniqueness_floor", c.uniqueness_floor},
               {"restarts", c.restarts}};
  j["summary"] = {{"quantile", c.quantile}};
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  return j;
}

void apply_json(const json& j, RunConfig& c) {
  static const char* top_keys[] = {"generation", "sampler", "path",
                                   "summary",    "out_dir", "threads"};
  for (const auto& [key, val] : j.items()) {
    (void)val;
    if (std::find_if(std::begin(top_keys), std::end(top_keys),
                     [&](const char* k) { return key == k; }) ==
        std::end(top_keys))
      throw config_error("config: unknown key '" + key + "'");
  }
  const auto get = [](const json& obj, const char* key, auto& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<std::decay_t<decltype(out)>>();
    } catch (const json::exception&) {
      throw config_error(std::string("config: bad value for '") + key + "'");
    }
  };
  const auto check_keys = [](const json& obj, const char* block,
                             std::initializer_list<const char*> keys) {
    for (const auto& [key, val] : obj.items()) {
      (void)val;
      if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
            return key == k;
          }) == keys.end())
        throw config_error("config: unknown key '" + std::string(block) +
                           "." + key + "'");
    }
  };
  if (j.contains("generation")) {
    const json& g = j.at("generation");
    check_keys(g, "generation",
               {"p", "k0", "n", "sigma", "dist", "nu", "replicates",
                "base_seed", "truth"});
    get(g, "p", c.generation.p);
    get(g, "k0", c.generation.k0);
    get(g, "n", c.generation.n);
    get(g, "sigma", c.generation.sigma);
    get(g, "dist", c.generation.dist);
    get(g, "nu", c.generation.nu);
    get(g, "replicates", c.generation.replicates);
    get(g, "base_seed", c.generation.base_seed);
    get(g, "truth", c.generation.truth);
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    check_keys(s, "sampler",
               {"prior", "loading_shape", "loading_scale", "uniqueness_shape",
                "uniqueness_scale", "k", "iterations", "burnin", "thin",
                "seed"});
    std::string prior = "unconstrained";
    get(s, "prior", prior);
    if (prior == "plt")
      c.prior.family = PriorConfig::Family::plt;
    else if (prior == "unconstrained")
      c.prior.family = PriorConfig::Family::unconstrained;
    else
      throw config_error("config: sampler.prior must be 'unconstrained' or 'plt'");
    get(s, "loading_shape", c.prior.loading_shape);
    get(s, "loading_scale", c.prior.loading_scale);
    get(s, "uniqueness_shape", c.prior.uniqueness_shape);
    get(s, "uniqueness_scale", c.prior.uniqueness_scale);
    get(s, "k", c.chain.k);
    get(s, "iterations", c.chain.iterations);
    get(s, "burnin", c.chain.burnin);
    get(s, "thin", c.chain.thin);
    get(s, "seed", c.chain.seed);
  }
  if (j.contains("path")) {
    const json& p = j.at("path");
    check_keys(p, "path",
               {"k_min", "k_max", "path_length", "tol", "max_iter",
                "uniqueness_floor", "restarts"});
    get(p, "k_min", c.k_min);
    get(p, "k_max", c.k_max);
    get(p, "path_length", c.path_length);
    get(p, "tol", c.tol);
    get(p, "max_iter", c.max_iter);
    get(p, "uniqueness_floor", c.uniqueness_floor);
    get(p, "restarts", c.restarts);
  }
  if (j.contains("summary")) {
    check_keys(j.at("summary"), "summary", {"quantile"});
    get(j.at("summary"), "quantile", c.quantile);
  }
  get(j, "out_dir", c.out_dir);
  get(j, "threads", c.threads);
}

}  // namespace

std::string config_digest_of(const RunConfig& cfg) {
  const std::string text = config_to_json(cfg).dump();
  std::uint64_t hv = 1469598103934665603ull;
  for (unsigned char ch : text) {
    hv ^= ch;
    hv *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hv));
  return buf;
}

RunConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot open config: " + file);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error("config parse error in " + file + ": " + e.what());
  }
  RunConfig cfg = default_config();
  apply_json(j, cfg);
  cfg.digest = config_digest_of(cfg);
  cfg.validate();
  return cfg;
}

namespace {

GroundTruth make_run_truth(const GenerationConfig& g, std::uint64_t seed) {
  if (g.truth == "harman") return harman_toy_truth();
  return random_plt_truth(g.p, g.k0, g.sigma, seed);
}

Dataset make_run_data(const GenerationConfig& g, const GroundTruth& truth,
                      std::uint64_t seed) {
  if (g.dist == "t") return simulate_t(truth, g.n, g.nu, seed);
  return simulate_normal(truth, g.n, seed);
}

void write_meta(const fs::path& file, const RunConfig& cfg,
                std::initializer_list<std::pair<const char*, std::string>>
                    extra = {}) {
  json j;
  j["config_digest"] = cfg.digest;
  for (const auto& [k, v] : extra) j[k] = v;
  std::ofstream f(file);
  if (!f) throw io_error("cannot open for writing: " + file.string());
  f << j.dump(1) << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw io_error("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  for (std::size_t r = 0; r < cfg.generation.replicates; ++r) {
    const std::uint64_t seed = cfg.generation.base_seed + r;
    const GroundTruth truth = make_run_truth(cfg.generation, seed);
    const Dataset data = make_run_data(cfg.generation, truth, seed);
    const fs::path dir = fs::path(cfg.out_dir) / ("rep" + std::to_string(r));
    ensure_dir(dir.string());
    const std::string note = "config: " + cfg.digest;
    csv::write_dataset(data.rows, (dir / "data.csv").string(), note);
    csv::write_matrix(truth.b0, (dir / "truth_b0.csv").string(), note);
    csv::write_vector(truth.sigma0, (dir / "truth_sigma0.csv").string(), note);
    csv::write_matrix(truth.omega0, (dir / "truth_omega0.csv").string(), note);
    std::cout << "replicate " << r << ": wrote " << dir.string() << '\n';
  }
  return 0;
}

int cmd_sample(const RunConfig& cfg, const std::string& data_path) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  Dataset data;
  data.rows = csv::read_dataset(data_path);
  const PosteriorDraws draws = run_gibbs(data, cfg.prior, cfg.chain);
  const fs::path out = fs::path(cfg.out_dir) / "draws.bin";
  write_draws(draws, out.string());
  write_meta(fs::path(cfg.out_dir) / "draws.meta.json", cfg,
             {{"provenance", draws.provenance},
              {"draws_file", out.string()}});
  std::cout << "retained " << draws.M << " draws at k=" << draws.k << " -> "
            << out.string() << '\n';
  return 0;
}

int cmd_fit(const RunConfig& cfg, const std::string& draws_path) {
  cfg.validate();
  ensure_dir(cfg.out_dir);
  const PosteriorDraws draws = read_draws(draws_path);
  const Matrix omega_bar = posterior_mean_cov(draws);
  PathConfig pc = cfg.resolved_path();
  if (cfg.k_max == 0) {
    pc.k_range.clear();
    for (std::size_t k = cfg.k_min; k <= draws.k; ++k) pc.k_range.push_back(k);
  }
  const FitPath path = fit_path(omega_bar, pc);
  const fs::path out = fs::path(cfg.out_dir) / "fitpath.json";
  write_fitpath_json(path, out.string());
  write_meta(fs::path(cfg.out_dir) / "fitpath.meta.json", cfg,
             {{"omega_bar_digest", path.omega_bar_digest}});
  std::cout << "fit " << path.fits.size() << " grid points -> " << out.string()
            << '\n';
  return 0;
}

int cmd_summarize(const RunConfig& cfg, const std::string& draws_path,
                  const std::string& fitpath_path) {
  cfg.validate();
  const PosteriorDraws draws = read_draws(draws_path);
  const FitPath path = read_fitpath_json(fitpath_path);
  const Matrix omega_bar = posterior_mean_cov(draws);
  if (cov_digest(omega_bar) != path.omega_bar_digest)
    throw config_error(
        "summarize: the fit path was computed from a different posterior mean "
        "(digest mismatch)");
  const LossGrid grid = loss_grid(path, draws);
  const double threshold = full_model_quantile(grid, cfg.quantile);
  SelectionResult sel = select(grid, threshold);
  sel.quantile = cfg.quantile;
  emit_summary(grid, sel, cfg.out_dir, cfg.digest);
  std::cout << "selected k=" << sel.k_selected << " lambda index "
            << sel.lambda_index << " (sparsity "
            << csv::fmt(sel.sparsity) << ") -> " << cfg.out_dir << '\n';
  return 0;
}

namespace {

ReplicateResult bench_one(const RunConfig& cfg, std::size_t r) {
  ReplicateResult res;
  res.index = r;
  res.seed = cfg.generation.base_seed + r;
  try {
    const GroundTruth truth = make_run_truth(cfg.generation, res.seed);
    const Dataset data = make_run_data(cfg.generation, truth, res.seed);
    ChainConfig chain = cfg.chain;
    chain.seed = res.seed;
    const PosteriorDraws draws = run_gibbs(data, cfg.prior, chain);
    const Matrix omega_bar = posterior_mean_cov(draws);
    PathConfig pc = cfg.resolved_path();
    if (cfg.k_max == 0) {
      pc.k_range.clear();
      for (std::size_t k = cfg.k_min; k <= draws.k; ++k)
        pc.k_range.push_back(k);
    }
    const FitPath path = fit_path(omega_bar, pc);
    const LossGrid grid = loss_grid(path, draws);
    const auto pick = [&](double q, std::size_t& k_out, double& rmse_out) {
      const double thr = full_model_quantile(grid, q);
      const SelectionResult sel = select(grid, thr);
      k_out = sel.k_selected;
      const PenalizedFit& fit =
          path.fits.at(grid.entries.at(sel.entry_index).fit_index);
      rmse_out = rmse(assemble_cov(fit.b_hat, fit.sigma_hat), truth.omega0);
    };
    pick(0.95, res.k_q95, res.rmse_q95);
    pick(0.99, res.k_q99, res.rmse_q99);
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

double quartile(Vector sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<ReplicateResult> run_bench(const RunConfig& cfg) {
  cfg.validate();
  const std::size_t r_total = cfg.generation.replicates;
  std::vector<ReplicateResult> results(r_total);
  std::size_t workers = cfg.threads;
  if (workers == 0) {
    workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
  }
  workers = std::min(workers, r_total);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto work = [&] {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= r_total) return;
      results[r] = bench_one(cfg, r);
      std::lock_guard<std::mutex> lock(log_mutex);
      if (results[r].failed)
        std::cout << "replicate " << r << ": FAILED (" << results[r].error
                  << ")\n";
      else
        std::cout << "replicate " << r << ": k95=" << results[r].k_q95
                  << " k99=" << results[r].k_q99
                  << " rmse95=" << results[r].rmse_q95 << '\n';
      std::cout.flush();
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return results;
}

int cmd_bench(const RunConfig& cfg) {
  const std::vector<ReplicateResult> results = run_bench(cfg);
  ensure_dir(cfg.out_dir);
  const fs::path base(cfg.out_dir);

  {
    std::ofstream f(base / "bench_replicates.csv");
    if (!f) throw io_error("cannot open bench_replicates.csv for writing");
    f << "# config: " << cfg.digest << '\n';
    f << "replicate,seed,failed,k_q95,k_q99,rmse_q95,rmse_q99,error\n";
    for (const ReplicateResult& r : results) {
      std::string err = r.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      f << r.index << ',' << r.seed << ',' << (r.failed ? 1 : 0) << ','
        << r.k_q95 << ',' << r.k_q99 << ',' << csv::fmt(r.rmse_q95) << ','
        << csv::fmt(r.rmse_q99) << ',' << err << '\n';
    }
  }

  std::ofstream f(base / "bench_report.csv");
  if (!f) throw io_error("cannot open bench_report.csv for writing");
  f << "# config: " << cfg.digest << '\n';
  f << "quantile,replicates_ok,replicates_failed,prop_correct,"
       "rmse_q1,rmse_median,rmse_q3\n";
  for (const double q : {0.95, 0.99}) {
    std::size_t ok = 0, correct = 0;
    Vector rmses;
    for (const ReplicateResult& r : results) {
      if (r.failed) continue;
      ++ok;
      const std::size_t k_sel = q == 0.95 ? r.k_q95 : r.k_q99;
      const double rm = q == 0.95 ? r.rmse_q95 : r.rmse_q99;
      if (k_sel == cfg.generation.k0) ++correct;
      rmses.push_back(rm);
    }
    std::sort(rmses.begin(), rmses.end());
    const double prop =
        ok ? static_cast<double>(correct) / static_cast<double>(ok)
           : std::numeric_limits<double>::quiet_NaN();
    f << csv::fmt(q) << ',' << ok << ',' << (results.size() - ok) << ','
      << csv::fmt(prop) << ',' << csv::fmt(quartile(rmses, 0.25)) << ','
      << csv::fmt(quartile(rmses, 0.5)) << ',' << csv::fmt(quartile(rmses, 0.75))
      << '\n';
    std::cout << "q=" << q << ": " << correct << '/' << ok
              << " correct, median rmse " << quartile(rmses, 0.5) << '\n';
  }
  if (!f) throw io_error("write failed: bench_report.csv");
  return 0;
}

int cmd_version() {
  std::cout << "faselect 1.0.0 (kernels: " << simd::active().name << ")\n";
  return 0;
}

}  // namespace faselect
