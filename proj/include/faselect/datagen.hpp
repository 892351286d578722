#pragma once

#include <cstdint>

#include "faselect/matrix.hpp"

namespace faselect {

// fixed truth used for data generation; omega0 always assembled from (b0, sigma0)
struct GroundTruth {
  Matrix b0;      // p x k0
  Vector sigma0;  // length p, entries > 0
  Matrix omega0;  // p x p
  std::size_t k0 = 0;

  void validate() const;  // omega0 reassembles within 1e-12
};

struct Dataset {
  Matrix rows;  // n x p
  bool centered = false;
};

GroundTruth make_truth(const Matrix& b0, const Vector& sigma0);

// classic 8-variable, 2-factor loadings with unit-diagonal covariance
GroundTruth harman_toy_truth();

// i.i.d. standard normal p x k0 draw rotated to positive lower triangular;
// the rotation preserves the Gram matrix
Matrix random_plt_loadings(std::size_t p, std::size_t k0, std::uint64_t seed);

// PLT loadings plus isotropic uniqueness sigma^2 I
GroundTruth random_plt_truth(std::size_t p, std::size_t k0, double sigma,
                             std::uint64_t seed);

// y_i = B0 f_i + eps_i, f ~ N(0, I), eps ~ N(0, diag(sigma0))
Dataset simulate_normal(const GroundTruth& truth, std::size_t n,
                        std::uint64_t seed);

// multivariate t: one shared chi-square divisor per vector, separately for
// factors and noise; nu <= 2 rejected
Dataset simulate_t(const GroundTruth& truth, std::size_t n, double nu,
                   std::uint64_t seed);

}  // namespace faselect
