#include "faselect/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/simd/kernels.hpp"

namespace faselect {

void PosteriorDraws::validate() const {
  if (M < 1) throw config_error("draws: M must be >= 1");
  if (loadings.size() != M || uniqueness.size() != M)
    throw config_error("draws: container sizes disagree with M");
  if (p < 1 || k < 1) throw config_error("draws: p and k must be >= 1");
  for (std::size_t m = 0; m < M; ++m) {
    if (loadings[m].rows() != p || loadings[m].cols() != k)
      throw config_error("draws: loadings shape mismatch at draw " +
                         std::to_string(m));
    if (uniqueness[m].size() != p)
      throw config_error("draws: uniqueness length mismatch at draw " +
                         std::to_string(m));
    for (std::size_t i = 0; i < loadings[m].size(); ++i)
      if (!std::isfinite(loadings[m].data()[i]))
        throw config_error("draws: non-finite loading at draw " +
                           std::to_string(m));
    for (double v : uniqueness[m])
      if (!(v > 0.0) || !std::isfinite(v))
        throw config_error("draws: non-positive uniqueness at draw " +
                           std::to_string(m));
  }
}

Matrix assemble_cov(const Matrix& b, const Vector& s) {
  const std::size_t p = b.rows();
  const std::size_t k = b.cols();
  if (s.size() != p) throw config_error("assemble_cov: dimension mismatch");
  Matrix omega(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    const double* bi = b.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double v = simd::dot(bi, b.row(j), k);
      omega(i, j) = v;
      omega(j, i) = v;
    }
    omega(i, i) = simd::dot(bi, bi, k) + s[i];
  }
  return omega;
}

double stein_loss(const Matrix& fit, const Matrix& target) {
  const std::size_t p = fit.rows();
  if (fit.cols() != p || target.rows() != p || target.cols() != p)
    throw config_error("stein_loss: dimension mismatch");
  Matrix l;
  if (!cholesky(fit, l))
    throw std::domain_error("stein_loss: fit covariance not positive definite");
  double trace = 0.0;
  Vector col(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < p; ++i) col[i] = target(i, j);
    solve_lower_inplace(l, col.data());
    solve_lower_t_inplace(l, col.data());
    trace += col[j];
  }
  return chol_logdet(l) + trace;
}

Matrix posterior_mean_cov(const PosteriorDraws& draws) {
  draws.validate();
  Matrix acc(draws.p, draws.p);
  for (std::size_t m = 0; m < draws.M; ++m) {
    const Matrix om = assemble_cov(draws.loadings[m], draws.uniqueness[m]);
    simd::axpy(1.0, om.data(), acc.data(), acc.size());
  }
  simd::scale(acc.data(), 1.0 / static_cast<double>(draws.M), acc.size());
  return acc;
}

double rmse(const Matrix& est, const Matrix& truth) {
  if (!est.same_shape(truth)) throw config_error("rmse: dimension mismatch");
  const double p = static_cast<double>(est.rows());
  const double ss = simd::sumsq_diff(est.data(), truth.data(), est.size());
  return std::sqrt(ss / (p * p));
}

bool check_cov(const Matrix& m) {
  if (m.rows() != m.cols()) return false;
  double scale = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!std::isfinite(v)) return false;
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * std::max(1.0, scale))
        return false;
  return true;
}

}  // namespace faselect
