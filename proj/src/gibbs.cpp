#include "faselect/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/rng.hpp"
#include "faselect/simd/kernels.hpp"

namespace faselect {

namespace {
constexpr std::uint64_t kStreamChain = 3;

bool all_finite(const double* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

[[noreturn]] void chain_abort(std::size_t sweep, const char* block) {
  throw numeric_error("gibbs: non-finite conditional in block '" +
                      std::string(block) + "' at sweep " +
                      std::to_string(sweep));
}

// draw from N(mean, P^-1) where lp is the Cholesky factor of the precision P
void sample_mvn_prec(Rng& rng, const Vector& mean, const Matrix& lp,
                     double* out) {
  const std::size_t d = mean.size();
  for (std::size_t i = 0; i < d; ++i) out[i] = rng.normal();
  solve_lower_t_inplace(lp, out);
  for (std::size_t i = 0; i < d; ++i) out[i] += mean[i];
}

}  // namespace

void PriorConfig::validate() const {
  if (!(loading_shape > 0.0) || !(loading_scale > 0.0) ||
      !(uniqueness_shape > 0.0) || !(uniqueness_scale > 0.0))
    throw config_error("prior: hyperparameters must be positive");
}

void ChainConfig::validate() const {
  if (k < 1) throw config_error("chain: k must be >= 1");
  if (thin < 1) throw config_error("chain: thin must be >= 1");
  if (burnin >= iterations)
    throw config_error("chain: burnin must be below iterations");
  if ((iterations - burnin) / thin == 0)
    throw config_error("chain: no draws retained after burnin/thinning");
}

namespace detail {
double sample_sigma2(Rng& rng, double shape, double scale, std::size_t n,
                     double rss) {
  return rng.inverse_gamma(shape + 0.5 * static_cast<double>(n),
                           scale + 0.5 * rss);
}
}  // namespace detail

PosteriorDraws run_gibbs(const Dataset& data, const PriorConfig& prior,
                         const ChainConfig& chain) {
  prior.validate();
  chain.validate();
  const std::size_t n = data.rows.rows();
  const std::size_t p = data.rows.cols();
  const std::size_t k = chain.k;
  if (n < 2) throw config_error("gibbs: need n >= 2 observations");
  if (k > p) throw config_error("gibbs: k must be <= p");
  const bool plt = prior.family == PriorConfig::Family::plt;

  Matrix y = data.rows;
  if (!data.centered) {
    for (std::size_t j = 0; j < p; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += y(i, j);
      mu /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) y(i, j) -= mu;
    }
  }

  Rng rng(substream(chain.seed, kStreamChain));

  // init from the principal eigenpairs of the sample covariance
  const Matrix c = [&] {
    Matrix m = mat_mul_tn(y, y);
    simd::scale(m.data(), 1.0 / static_cast<double>(n), m.size());
    return m;
  }();
  Vector evals;
  Matrix evecs;
  sym_eigen(c, evals, evecs);
  Matrix b(p, k);
  for (std::size_t q = 0; q < k; ++q) {
    const double s = std::sqrt(std::max(evals[q], 0.0));
    for (std::size_t j = 0; j < p; ++j) b(j, q) = s * evecs(j, q);
  }
  if (plt) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t q = j + 1; q < k; ++q) b(j, q) = 0.0;
      if (b(j, j) <= 0.0) b(j, j) = 0.1;
    }
  }
  Vector sigma2(p);
  for (std::size_t j = 0; j < p; ++j)
    sigma2[j] =
        std::max(c(j, j) - simd::dot(b.row(j), b.row(j), k), 1e-4);
  double eta = 1.0;

  const std::size_t m_total = (chain.iterations - chain.burnin) / chain.thin;
  PosteriorDraws draws;
  draws.p = p;
  draws.k = k;
  draws.M = m_total;
  draws.provenance = plt ? "gibbs-plt" : "gibbs-unconstrained";
  draws.loadings.reserve(m_total);
  draws.uniqueness.reserve(m_total);

  Matrix f(n, k);
  Matrix bscaled(p, k);
  Vector mean(k), rhs(k), rowbuf(k);
  Matrix prec(k, k), lp(k, k);

  // number of free loadings entries under the active prior
  std::size_t nfree = 0;
  for (std::size_t j = 0; j < p; ++j)
    nfree += plt ? std::min(j + 1, k) : k;

  for (std::size_t sweep = 1; sweep <= chain.iterations; ++sweep) {
    // factors: f_i ~ N(V B^T Sigma^-1 y_i, V), V = (I + B^T Sigma^-1 B)^-1
    for (std::size_t j = 0; j < p; ++j) {
      const double inv = 1.0 / sigma2[j];
      for (std::size_t q = 0; q < k; ++q) bscaled(j, q) = b(j, q) * inv;
    }
    Matrix a = mat_mul_tn(b, bscaled);  // B^T Sigma^-1 B
    for (std::size_t q = 0; q < k; ++q) a(q, q) += 1.0;
    if (!cholesky(a, lp)) chain_abort(sweep, "factors");
    const Matrix t = mat_mul(y, bscaled);  // row i holds B^T Sigma^-1 y_i
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t q = 0; q < k; ++q) mean[q] = t(i, q);
      solve_lower_inplace(lp, mean.data());
      solve_lower_t_inplace(lp, mean.data());
      sample_mvn_prec(rng, mean, lp, f.row(i));
    }
    if (!all_finite(f.data(), f.size())) chain_abort(sweep, "factors");

    // loadings rows given factors
    const Matrix g = mat_mul_tn(f, f);  // F^T F, k x k
    const Matrix h = mat_mul_tn(f, y);  // F^T y, k x p
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t d = plt ? std::min(j + 1, k) : k;
      const double inv = 1.0 / sigma2[j];
      for (std::size_t q = 0; q < d; ++q) {
        rhs[q] = h(q, j) * inv;
        for (std::size_t r = 0; r < d; ++r)
          prec(q, r) = g(q, r) * inv + ((q == r) ? 1.0 / eta : 0.0);
      }
      const bool truncated = plt && j < k;  // diagonal entry restricted to > 0
      if (!truncated) {
        Matrix psub(d, d), lsub(d, d);
        for (std::size_t q = 0; q < d; ++q)
          for (std::size_t r = 0; r < d; ++r) psub(q, r) = prec(q, r);
        if (!cholesky(psub, lsub)) chain_abort(sweep, "loadings");
        Vector mu(d);
        for (std::size_t q = 0; q < d; ++q) mu[q] = rhs[q];
        solve_lower_inplace(lsub, mu.data());
        solve_lower_t_inplace(lsub, mu.data());
        sample_mvn_prec(rng, mu, lsub, rowbuf.data());
        for (std::size_t q = 0; q < d; ++q) b(j, q) = rowbuf[q];
      } else {
        // last free coordinate is the positive diagonal: sample it from its
        // truncated marginal, then the rest from the conditional normal
        Matrix psub(d, d);
        for (std::size_t q = 0; q < d; ++q)
          for (std::size_t r = 0; r < d; ++r) psub(q, r) = prec(q, r);
        Matrix cov;
        try {
          cov = spd_inverse(psub);
        } catch (const std::domain_error&) {
          chain_abort(sweep, "loadings");
        }
        Vector mu(d, 0.0);
        for (std::size_t q = 0; q < d; ++q)
          for (std::size_t r = 0; r < d; ++r) mu[q] += cov(q, r) * rhs[r];
        const std::size_t last = d - 1;
        const double vll = cov(last, last);
        if (!(vll > 0.0) || !std::isfinite(vll)) chain_abort(sweep, "loadings");
        const double diag = rng.truncated_normal_pos(mu[last], std::sqrt(vll));
        b(j, last) = diag;
        if (d > 1) {
          const std::size_t m = d - 1;
          Vector cmean(m);
          Matrix ccov(m, m);
          const double shift = (diag - mu[last]) / vll;
          for (std::size_t q = 0; q < m; ++q) {
            cmean[q] = mu[q] + cov(q, last) * shift;
            for (std::size_t r = 0; r < m; ++r)
              ccov(q, r) = cov(q, r) - cov(q, last) * cov(r, last) / vll;
          }
          Matrix lc(m, m);
          if (!cholesky(ccov, lc)) chain_abort(sweep, "loadings");
          Vector z(m);
          for (std::size_t q = 0; q < m; ++q) z[q] = rng.normal();
          for (std::size_t q = 0; q < m; ++q) {
            double v = cmean[q];
            for (std::size_t r = 0; r <= q; ++r) v += lc(q, r) * z[r];
            b(j, q) = v;
          }
        }
      }
    }
    if (!all_finite(b.data(), b.size())) chain_abort(sweep, "loadings");

    // uniqueness variances from per-variable residual sums of squares
    const Matrix fb = mat_mul_nt(f, b);  // n x p fitted values
    Vector rss(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* yi = y.row(i);
      const double* fi = fb.row(i);
      for (std::size_t j = 0; j < p; ++j) {
        const double r = yi[j] - fi[j];
        rss[j] += r * r;
      }
    }
    for (std::size_t j = 0; j < p; ++j) {
      sigma2[j] = detail::sample_sigma2(rng, prior.uniqueness_shape,
                                        prior.uniqueness_scale, n, rss[j]);
      if (!(sigma2[j] > 0.0) || !std::isfinite(sigma2[j]))
        chain_abort(sweep, "uniqueness");
    }

    // loading variance eta from all free entries; the positivity truncation
    // on PLT diagonals leaves the conditional inverse-gamma untouched
    double ssq = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const std::size_t d = plt ? std::min(j + 1, k) : k;
      ssq += simd::dot(b.row(j), b.row(j), d);
    }
    eta = rng.inverse_gamma(prior.loading_shape + 0.5 * static_cast<double>(nfree),
                            prior.loading_scale + 0.5 * ssq);
    if (!(eta > 0.0) || !std::isfinite(eta)) chain_abort(sweep, "eta");

    if (sweep > chain.burnin && (sweep - chain.burnin) % chain.thin == 0) {
      draws.loadings.push_back(b);
      draws.uniqueness.push_back(sigma2);
    }
  }

  draws.validate();
  return draws;
}

}  // namespace faselect
