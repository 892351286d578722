#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>

#include "faselect/core.hpp"
#include "faselect/datagen.hpp"
#include "faselect/errors.hpp"
#include "faselect/gibbs.hpp"
#include "faselect/linalg.hpp"
#include "faselect/rng.hpp"

using namespace faselect;

namespace {

ChainConfig quick_chain(std::size_t k, std::uint64_t seed,
                        std::size_t iterations, std::size_t burnin) {
  ChainConfig c;
  c.k = k;
  c.iterations = iterations;
  c.burnin = burnin;
  c.thin = 1;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("chain config validation") {
  ChainConfig c = quick_chain(2, 1, 100, 50);
  CHECK_NOTHROW(c.validate());

  ChainConfig no_draws = quick_chain(2, 1, 100, 100);
  CHECK_THROWS_AS(no_draws.validate(), config_error);

  ChainConfig burnin_after = quick_chain(2, 1, 100, 200);
  CHECK_THROWS_AS(burnin_after.validate(), config_error);

  ChainConfig zero_thin = quick_chain(2, 1, 100, 50);
  zero_thin.thin = 0;
  CHECK_THROWS_AS(zero_thin.validate(), config_error);

  // thin too coarse to retain anything
  ChainConfig coarse = quick_chain(2, 1, 101, 100);
  coarse.thin = 2;
  CHECK_THROWS_AS(coarse.validate(), config_error);

  ChainConfig zero_k = quick_chain(0, 1, 100, 50);
  CHECK_THROWS_AS(zero_k.validate(), config_error);
}

TEST_CASE("prior config validation") {
  PriorConfig p;
  CHECK_NOTHROW(p.validate());
  PriorConfig bad = p;
  bad.loading_shape = 0.0;
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad = p;
  bad.uniqueness_scale = -1.0;
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("retention count and shapes") {
  GroundTruth t = random_plt_truth(5, 2, 0.5, 11);
  Dataset d = simulate_normal(t, 60, 11);
  PriorConfig prior;

  ChainConfig c = quick_chain(2, 3, 220, 100);
  c.thin = 3;  // retains floor(120 / 3) = 40 draws
  PosteriorDraws draws = run_gibbs(d, prior, c);
  CHECK(draws.M == 40);
  CHECK(draws.p == 5);
  CHECK(draws.k == 2);
  CHECK(draws.loadings.size() == 40);
  CHECK(draws.uniqueness.size() == 40);
  CHECK_NOTHROW(draws.validate());
  CHECK(draws.provenance.find("gibbs") != std::string::npos);
}

TEST_CASE("same seed reproduces the chain bitwise") {
  GroundTruth t = random_plt_truth(6, 2, 0.5, 21);
  Dataset d = simulate_normal(t, 80, 21);
  PriorConfig prior;
  ChainConfig c = quick_chain(3, 77, 400, 200);

  PosteriorDraws a = run_gibbs(d, prior, c);
  PosteriorDraws b = run_gibbs(d, prior, c);
  REQUIRE(a.M == b.M);
  for (std::size_t m = 0; m < a.M; ++m) {
    CHECK(a.loadings[m] == b.loadings[m]);
    for (std::size_t j = 0; j < a.p; ++j)
      CHECK(a.uniqueness[m][j] == b.uniqueness[m][j]);
  }

  ChainConfig c2 = c;
  c2.seed = 78;
  PosteriorDraws other = run_gibbs(d, prior, c2);
  CHECK(max_abs_diff(other.loadings[0], a.loadings[0]) > 0.0);
}

TEST_CASE("centering is a no-op on data with exact zero column sums") {
  // rows come in (x, -x) pairs, so sequential column sums cancel exactly and
  // the internally computed means are exactly zero; the chain must match the
  // pre-centered run bitwise
  GroundTruth t = random_plt_truth(4, 1, 0.5, 31);
  Dataset half = simulate_normal(t, 25, 31);
  Dataset d;
  d.rows = Matrix(50, 4);
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      d.rows(2 * i, j) = half.rows(i, j);
      d.rows(2 * i + 1, j) = -half.rows(i, j);
    }
  d.centered = false;
  Dataset pre = d;
  pre.centered = true;

  PriorConfig prior;
  ChainConfig c = quick_chain(1, 5, 200, 100);
  PosteriorDraws a = run_gibbs(d, prior, c);
  PosteriorDraws b = run_gibbs(pre, prior, c);
  REQUIRE(a.M == b.M);
  for (std::size_t m = 0; m < a.M; ++m) CHECK(a.loadings[m] == b.loadings[m]);
}

TEST_CASE("plt prior fixes structural zeros and positive diagonals") {
  GroundTruth t = random_plt_truth(6, 3, 0.4, 41);
  Dataset d = simulate_normal(t, 120, 41);
  PriorConfig prior;
  prior.family = PriorConfig::Family::plt;
  ChainConfig c = quick_chain(3, 9, 600, 300);

  PosteriorDraws draws = run_gibbs(d, prior, c);
  for (std::size_t m = 0; m < draws.M; ++m) {
    const Matrix& b = draws.loadings[m];
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(b(j, j) > 0.0);
      for (std::size_t q = j + 1; q < 3; ++q) CHECK(b(j, q) == 0.0);
    }
  }
}

TEST_CASE("unconstrained prior leaves all entries free") {
  GroundTruth t = random_plt_truth(5, 2, 0.4, 51);
  Dataset d = simulate_normal(t, 100, 51);
  PriorConfig prior;
  ChainConfig c = quick_chain(2, 13, 300, 150);
  PosteriorDraws draws = run_gibbs(d, prior, c);
  // the (0,1) entry sits above the diagonal; unconstrained chains move it
  bool moved = false;
  for (std::size_t m = 0; m < draws.M; ++m)
    moved = moved || draws.loadings[m](0, 1) != 0.0;
  CHECK(moved);
}

TEST_CASE("posterior mean covariance tracks a unit-diagonal truth") {
  GroundTruth t = harman_toy_truth();
  Dataset d = simulate_normal(t, 100, 4242);
  PriorConfig prior;
  ChainConfig c = quick_chain(5, 4242, 4000, 2000);
  PosteriorDraws draws = run_gibbs(d, prior, c);
  Matrix om = posterior_mean_cov(draws);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(om(j, j) > 0.7);
    CHECK(om(j, j) < 1.3);
  }
  CHECK(check_cov(om));
}

TEST_CASE("uniqueness conditional matches the analytic inverse gamma") {
  // shape 1 + 30/2 = 16, scale 1 + 10/2 = 6:
  // mean 6/15 = 0.4, variance 36/(225 * 14)
  Rng rng(90210);
  const double shape = 1.0, scale = 1.0, rss = 10.0;
  const std::size_t n = 30;
  const double post_shape = shape + double(n) / 2.0;
  const double post_scale = scale + rss / 2.0;
  const double want_mean = post_scale / (post_shape - 1.0);
  const double want_var = post_scale * post_scale /
                          ((post_shape - 1.0) * (post_shape - 1.0) *
                           (post_shape - 2.0));

  const std::size_t m = 60000;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = detail::sample_sigma2(rng, shape, scale, n, rss);
    REQUIRE(x > 0.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / double(m);
  const double var = s2 / double(m) - mean * mean;
  CHECK(mean == doctest::Approx(want_mean).epsilon(0.02));
  CHECK(var == doctest::Approx(want_var).epsilon(0.05));
}

TEST_CASE("more data concentrates the posterior near the truth") {
  PriorConfig prior;
  prior.family = PriorConfig::Family::plt;
  int improved = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::uint64_t seed = 9000 + std::uint64_t(rep);
    GroundTruth t = random_plt_truth(8, 2, 0.2, seed);

    Dataset small = simulate_normal(t, 100, seed);
    Dataset large = simulate_normal(t, 1000, seed + 100000);

    ChainConfig c = quick_chain(2, seed, 1500, 750);
    const double err_small = rmse(posterior_mean_cov(run_gibbs(small, prior, c)),
                                  t.omega0);
    const double err_large = rmse(posterior_mean_cov(run_gibbs(large, prior, c)),
                                  t.omega0);
    improved += (err_large < err_small);
  }
  CHECK(improved >= 8);
}
