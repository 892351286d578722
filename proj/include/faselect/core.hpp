#pragma once

#include <string>
#include <vector>

#include "faselect/matrix.hpp"

namespace faselect {

// M retained posterior draws of (loadings, uniqueness) at fixed dimension k.
struct PosteriorDraws {
  std::vector<Matrix> loadings;    // each p x k
  std::vector<Vector> uniqueness;  // each length p, entries > 0
  std::size_t p = 0;
  std::size_t k = 0;
  std::size_t M = 0;
  std::string provenance;

  // throws config_error when counts, shapes, positivity, or finiteness fail
  void validate() const;
};

// BB^T + diag(S). The diagonal is dot(row, row) + S_j with the same dot
// kernel used everywhere else, so diagonals agree bitwise with downstream
// recomputation.
Matrix assemble_cov(const Matrix& b, const Vector& s);

// log|fit| + tr(fit^-1 target), via Cholesky of fit and columnwise solves.
// Throws std::domain_error when fit is not positive definite.
double stein_loss(const Matrix& fit, const Matrix& target);

// (1/M) sum_m assemble_cov(B_m, S_m)
Matrix posterior_mean_cov(const PosteriorDraws& draws);

// sqrt( (1/p^2) sum_jq (est - truth)^2 ), divisor over all p^2 entries
double rmse(const Matrix& est, const Matrix& truth);

// square, finite, symmetric within 1e-12 relative
bool check_cov(const Matrix& m);

}  // namespace faselect
