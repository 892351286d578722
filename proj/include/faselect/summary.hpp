#pragma once

#include <string>
#include <utility>
#include <vector>

#include "faselect/core.hpp"
#include "faselect/pfa.hpp"

namespace faselect {

struct LossEntry {
  std::size_t k_tilde = 0;
  std::size_t lambda_index = 0;
  double lambda = 0.0;
  double expected_loss = 0.0;  // NaN when excluded
  Vector per_draw_losses;      // empty when excluded
  bool excluded = false;
  double sparsity = 0.0;  // zero share of the fit's loadings
  std::size_t fit_index = 0;  // position in the originating FitPath
};

struct LossGrid {
  std::vector<LossEntry> entries;
  std::size_t full_model_index = 0;  // entry at (k_tilde = draws.k, lambda_0)
  std::size_t M = 0;
};

struct SelectionResult {
  std::size_t k_selected = 0;
  double lambda_selected = 0.0;
  std::size_t lambda_index = 0;
  double quantile = 0.0;  // filled by the caller that chose the threshold
  double threshold = 0.0;
  double sparsity = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> feasible_set;
  bool fallback_full_model = false;  // empty feasible set
  std::size_t entry_index = 0;       // into LossGrid.entries
};

// per-draw losses of every unexcluded fit against each draw's covariance;
// fits with zeroed columns are excluded (the full model never is)
LossGrid loss_grid(const FitPath& path, const PosteriorDraws& draws);

// linear-interpolation empirical quantile of the full model's loss sample
double full_model_quantile(const LossGrid& grid, double q);

// smallest feasible dimension, then the largest penalty within it
SelectionResult select(const LossGrid& grid, double threshold);

// share of exactly-zero entries
double sparsity(const Matrix& b);

// summary.csv, fullmodel_losses.csv, selection.json under dir
void emit_summary(const LossGrid& grid, const SelectionResult& selection,
                  const std::string& dir,
                  const std::string& config_digest = "");

}  // namespace faselect
