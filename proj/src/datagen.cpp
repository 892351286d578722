#include "faselect/datagen.hpp"

#include <cmath>

#include "faselect/core.hpp"
#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/rng.hpp"
#include "faselect/simd/kernels.hpp"

namespace faselect {

namespace {
// distinct substreams so one replicate seed feeds several generators
constexpr std::uint64_t kStreamLoadings = 1;
constexpr std::uint64_t kStreamData = 2;
}  // namespace

void GroundTruth::validate() const {
  const std::size_t p = b0.rows();
  if (k0 != b0.cols() || sigma0.size() != p)
    throw config_error("truth: dimension mismatch");
  for (double v : sigma0)
    if (!(v > 0.0) || !std::isfinite(v))
      throw config_error("truth: uniqueness entries must be positive");
  const Matrix re = assemble_cov(b0, sigma0);
  if (max_abs_diff(re, omega0) > 1e-12)
    throw config_error("truth: omega0 does not match assemble_cov(b0, sigma0)");
}

GroundTruth make_truth(const Matrix& b0, const Vector& sigma0) {
  GroundTruth t;
  t.b0 = b0;
  t.sigma0 = sigma0;
  t.omega0 = assemble_cov(b0, sigma0);
  t.k0 = b0.cols();
  t.validate();
  return t;
}

GroundTruth harman_toy_truth() {
  static const double col1[8] = {0.879, 0.919, 0.890, 0.858,
                                 0.238, 0.183, 0.135, 0.250};
  static const double col2[8] = {0.272, 0.210, 0.182, 0.246,
                                 0.900, 0.792, 0.729, 0.684};
  Matrix b0(8, 2);
  Vector s0(8);
  for (std::size_t j = 0; j < 8; ++j) {
    b0(j, 0) = col1[j];
    b0(j, 1) = col2[j];
    // every communality lies in [0.5, 1], so 1 - dot is exact and the
    // assembled diagonal dot + (1 - dot) is exactly 1
    s0[j] = 1.0 - simd::dot(b0.row(j), b0.row(j), 2);
  }
  return make_truth(b0, s0);
}

Matrix random_plt_loadings(std::size_t p, std::size_t k0, std::uint64_t seed) {
  if (k0 > p) throw config_error("plt loadings: k0 must be <= p");
  Rng rng(substream(seed, kStreamLoadings));
  Matrix raw(p, k0);
  for (std::size_t i = 0; i < raw.size(); ++i) raw.data()[i] = rng.normal();

  // orthogonal Q with (top block) * Q lower triangular: QR of the block's
  // transpose gives top * Qh = R^T, then column signs force a positive diagonal
  Matrix top(k0, k0);
  for (std::size_t i = 0; i < k0; ++i)
    for (std::size_t j = 0; j < k0; ++j) top(i, j) = raw(i, j);
  Matrix qh, r;
  qr_square(transpose(top), qh, r);
  for (std::size_t q = 0; q < k0; ++q) {
    if (r(q, q) < 0.0)
      for (std::size_t i = 0; i < k0; ++i) qh(i, q) = -qh(i, q);
  }
  Matrix out = mat_mul(raw, qh);
  // the rotated top block is triangular by construction; zero the roundoff
  for (std::size_t j = 0; j < k0; ++j)
    for (std::size_t q = j + 1; q < k0; ++q) out(j, q) = 0.0;
  return out;
}

GroundTruth random_plt_truth(std::size_t p, std::size_t k0, double sigma,
                             std::uint64_t seed) {
  if (!(sigma > 0.0)) throw config_error("plt truth: sigma must be positive");
  const Matrix b0 = random_plt_loadings(p, k0, seed);
  Vector s0(p, sigma * sigma);
  return make_truth(b0, s0);
}

Dataset simulate_normal(const GroundTruth& truth, std::size_t n,
                        std::uint64_t seed) {
  truth.validate();
  if (n < 2) throw config_error("simulate: n must be >= 2");
  const std::size_t p = truth.b0.rows();
  const std::size_t k0 = truth.k0;
  Rng rng(substream(seed, kStreamData));
  Vector f(k0), sd(p);
  for (std::size_t j = 0; j < p; ++j) sd[j] = std::sqrt(truth.sigma0[j]);
  Dataset d;
  d.rows = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < k0; ++q) f[q] = rng.normal();
    double* yi = d.rows.row(i);
    for (std::size_t j = 0; j < p; ++j)
      yi[j] = simd::dot(truth.b0.row(j), f.data(), k0) + sd[j] * rng.normal();
  }
  return d;
}

Dataset simulate_t(const GroundTruth& truth, std::size_t n, double nu,
                   std::uint64_t seed) {
  truth.validate();
  if (!(nu > 2.0)) throw config_error("simulate_t: nu must exceed 2");
  if (n < 2) throw config_error("simulate: n must be >= 2");
  const std::size_t p = truth.b0.rows();
  const std::size_t k0 = truth.k0;
  Rng rng(substream(seed, kStreamData));
  Vector f(k0), eps(p), sd(p);
  for (std::size_t j = 0; j < p; ++j) sd[j] = std::sqrt(truth.sigma0[j]);
  Dataset d;
  d.rows = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < k0; ++q) f[q] = rng.normal();
    const double wf = std::sqrt(rng.chi_square(nu) / nu);
    for (std::size_t q = 0; q < k0; ++q) f[q] /= wf;
    for (std::size_t j = 0; j < p; ++j) eps[j] = sd[j] * rng.normal();
    const double we = std::sqrt(rng.chi_square(nu) / nu);
    double* yi = d.rows.row(i);
    for (std::size_t j = 0; j < p; ++j)
      yi[j] = simd::dot(truth.b0.row(j), f.data(), k0) + eps[j] / we;
  }
  return d;
}

}  // namespace faselect
