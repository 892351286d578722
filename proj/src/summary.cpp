#include "faselect/summary.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "faselect/csv.hpp"
#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/simd/kernels.hpp"

namespace faselect {

namespace {

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double quad_form(const Matrix& a, const double* v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    acc += v[i] * simd::dot(a.row(i), v, a.cols());
  return acc;
}

}  // namespace

double sparsity(const Matrix& b) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.data()[i] == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(b.size());
}

LossGrid loss_grid(const FitPath& path, const PosteriorDraws& draws) {
  draws.validate();
  if (path.p != draws.p)
    throw config_error("loss_grid: fit path and draws disagree on p");
  if (path.fits.empty()) throw config_error("loss_grid: empty fit path");

  std::size_t full_fit = path.fits.size();
  for (std::size_t i = 0; i < path.fits.size(); ++i)
    if (path.fits[i].k_tilde == draws.k && path.fits[i].lambda_index == 0)
      full_fit = i;
  if (full_fit == path.fits.size())
    throw config_error(
        "loss_grid: no full-model fit (k_tilde = " + std::to_string(draws.k) +
        ", lambda = 0) in the path");

  LossGrid grid;
  grid.M = draws.M;
  grid.entries.resize(path.fits.size());

  // per-fit factorization work shared across draws
  std::vector<Matrix> delta(path.fits.size());
  std::vector<double> logdet(path.fits.size());
  for (std::size_t i = 0; i < path.fits.size(); ++i) {
    const PenalizedFit& fit = path.fits[i];
    LossEntry& e = grid.entries[i];
    e.k_tilde = fit.k_tilde;
    e.lambda_index = fit.lambda_index;
    e.lambda = fit.lambda;
    e.fit_index = i;
    e.sparsity = sparsity(fit.b_hat);
    e.excluded = !fit.zero_columns.empty() && i != full_fit;
    if (e.excluded) {
      e.expected_loss = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const Matrix omega = assemble_cov(fit.b_hat, fit.sigma_hat);
    Matrix l;
    if (!cholesky(omega, l))
      throw numeric_error("loss_grid: fit covariance at (k=" +
                          std::to_string(fit.k_tilde) +
                          ", lambda index " + std::to_string(fit.lambda_index) +
                          ") not positive definite");
    logdet[i] = chol_logdet(l);
    delta[i] = spd_inverse(omega);
    e.per_draw_losses.resize(draws.M);
  }

  // loss per draw: logdet + sum_q b_q' Delta b_q + sum_j Delta_jj s_j
  for (std::size_t m = 0; m < draws.M; ++m) {
    const Matrix bt = transpose(draws.loadings[m]);  // rows are factor columns
    const Vector& s = draws.uniqueness[m];
    for (std::size_t i = 0; i < path.fits.size(); ++i) {
      LossEntry& e = grid.entries[i];
      if (e.excluded) continue;
      double tr = 0.0;
      for (std::size_t q = 0; q < draws.k; ++q)
        tr += quad_form(delta[i], bt.row(q));
      for (std::size_t j = 0; j < draws.p; ++j) tr += delta[i](j, j) * s[j];
      e.per_draw_losses[m] = logdet[i] + tr;
    }
  }

  for (LossEntry& e : grid.entries) {
    if (e.excluded) continue;
    e.expected_loss = pairwise_sum(e.per_draw_losses.data(), grid.M) /
                      static_cast<double>(grid.M);
  }

  grid.full_model_index = full_fit;
  return grid;
}

double full_model_quantile(const LossGrid& grid, double q) {
  if (!(q > 0.0) || !(q < 1.0))
    throw config_error("quantile must lie strictly inside (0,1)");
  const LossEntry& fm = grid.entries.at(grid.full_model_index);
  if (fm.per_draw_losses.empty())
    throw config_error("full model has no stored per-draw losses");
  Vector x = fm.per_draw_losses;
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const double h = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

SelectionResult select(const LossGrid& grid, double threshold) {
  if (grid.entries.empty()) throw config_error("select: empty loss grid");
  SelectionResult sel;
  sel.threshold = threshold;
  const LossEntry* pick = nullptr;
  for (const LossEntry& e : grid.entries) {
    if (e.excluded || !(e.expected_loss <= threshold)) continue;
    sel.feasible_set.emplace_back(e.k_tilde, e.lambda_index);
    if (!pick || e.k_tilde < pick->k_tilde ||
        (e.k_tilde == pick->k_tilde &&
         (e.lambda > pick->lambda ||
          (e.lambda == pick->lambda && e.lambda_index > pick->lambda_index))))
      pick = &e;
  }
  if (!pick) {
    pick = &grid.entries.at(grid.full_model_index);
    sel.fallback_full_model = true;
  }
  sel.k_selected = pick->k_tilde;
  sel.lambda_selected = pick->lambda;
  sel.lambda_index = pick->lambda_index;
  sel.sparsity = pick->sparsity;
  sel.entry_index =
      static_cast<std::size_t>(pick - grid.entries.data());
  return sel;
}

void emit_summary(const LossGrid& grid, const SelectionResult& selection,
                  const std::string& dir, const std::string& config_digest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
  const auto base = std::filesystem::path(dir);

  {
    std::ofstream f(base / "summary.csv");
    if (!f) throw io_error("cannot open summary.csv for writing");
    if (!config_digest.empty()) f << "# config: " << config_digest << '\n';
    f << "k_tilde,lambda_index,lambda,expected_loss,excluded,feasible,selected\n";
    for (std::size_t i = 0; i < grid.entries.size(); ++i) {
      const LossEntry& e = grid.entries[i];
      const bool feasible = !e.excluded && e.expected_loss <= selection.threshold;
      const bool selected = i == selection.entry_index;
      f << e.k_tilde << ',' << e.lambda_index << ',' << csv::fmt(e.lambda)
        << ',' << csv::fmt(e.expected_loss) << ',' << (e.excluded ? 1 : 0)
        << ',' << (feasible ? 1 : 0) << ',' << (selected ? 1 : 0) << '\n';
    }
    if (!f) throw io_error("write failed: summary.csv");
  }

  {
    std::ofstream f(base / "fullmodel_losses.csv");
    if (!f) throw io_error("cannot open fullmodel_losses.csv for writing");
    if (!config_digest.empty()) f << "# config: " << config_digest << '\n';
    f << "loss\n";
    for (double v : grid.entries.at(grid.full_model_index).per_draw_losses)
      f << csv::fmt(v) << '\n';
    if (!f) throw io_error("write failed: fullmodel_losses.csv");
  }

  {
    nlohmann::json j;
    j["k_selected"] = selection.k_selected;
    j["lambda_selected"] = selection.lambda_selected;
    j["lambda_index"] = selection.lambda_index;
    j["quantile"] = selection.quantile;
    j["threshold"] = selection.threshold;
    j["sparsity"] = selection.sparsity;
    j["fallback_full_model"] = selection.fallback_full_model;
    j["expected_loss"] =
        grid.entries.at(selection.entry_index).expected_loss;
    auto& fs = j["feasible_set"] = nlohmann::json::array();
    for (const auto& [k, li] : selection.feasible_set)
      fs.push_back({{"k_tilde", k}, {"lambda_index", li}});
    if (!config_digest.empty()) j["config_digest"] = config_digest;
    std::ofstream f(base / "selection.json");
    if (!f) throw io_error("cannot open selection.json for writing");
    f << j.dump(1) << '\n';
    if (!f) throw io_error("write failed: selection.json");
  }
}

}  // namespace faselect
