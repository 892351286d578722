#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"

#include "faselect/cli.hpp"
#include "faselect/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"factor-model shrinkage and selection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  double quantile = 0.0;
  std::size_t threads = 0, k = 0, lambda_path = 0;
  bool has_seed = false, has_quantile = false, has_threads = false,
       has_k = false, has_lambda_path = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "base seed override")
      ->each([&](const std::string&) { has_seed = true; });
  app.add_option("--quantile", quantile, "summary quantile override")
      ->each([&](const std::string&) { has_quantile = true; });
  app.add_option("--threads", threads, "worker count override")
      ->each([&](const std::string&) { has_threads = true; });
  app.add_option("--k", k, "working factor dimension override")
      ->each([&](const std::string&) { has_k = true; });
  app.add_option("--lambda-path", lambda_path,
                 "count of nonzero penalty levels")
      ->each([&](const std::string&) { has_lambda_path = true; });

  auto* sim = app.add_subcommand("simulate", "write synthetic datasets");
  auto* sam = app.add_subcommand("sample", "posterior sampling for a dataset");
  std::string data_path;
  sam->add_option("data", data_path, "dataset CSV")->required();
  auto* fit = app.add_subcommand("fit", "penalized fits over the grid");
  std::string draws_path;
  fit->add_option("draws", draws_path, "posterior draws file")->required();
  auto* summ = app.add_subcommand("summarize", "loss summary and selection");
  std::string s_draws, s_fitpath;
  summ->add_option("draws", s_draws, "posterior draws file")->required();
  summ->add_option("fitpath", s_fitpath, "fit path JSON")->required();
  auto* bench = app.add_subcommand("bench", "replicated end-to-end benchmark");
  auto* ver = app.add_subcommand("version", "print version and kernel backend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    faselect::RunConfig cfg = config_path.empty()
                                  ? faselect::default_config()
                                  : faselect::load_config(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (has_seed) {
      cfg.generation.base_seed = seed;
      cfg.chain.seed = seed;
    }
    if (has_quantile) cfg.quantile = quantile;
    if (has_threads) cfg.threads = threads;
    if (has_k) cfg.chain.k = k;
    if (has_lambda_path) cfg.path_length = lambda_path;
    cfg.digest = faselect::config_digest_of(cfg);

    if (sim->parsed()) return faselect::cmd_simulate(cfg);
    if (sam->parsed()) return faselect::cmd_sample(cfg, data_path);
    if (fit->parsed()) return faselect::cmd_fit(cfg, draws_path);
    if (summ->parsed()) return faselect::cmd_summarize(cfg, s_draws, s_fitpath);
    if (bench->parsed()) return faselect::cmd_bench(cfg);
    if (ver->parsed()) return faselect::cmd_version();
    return 2;
  } catch (const faselect::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const faselect::io_error& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 4;
  } catch (const faselect::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
