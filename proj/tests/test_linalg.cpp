#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "faselect/linalg.hpp"
#include "faselect/rng.hpp"

using namespace faselect;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// A^T A + ridge I is SPD for any A when ridge > 0.
Matrix random_spd(Rng& rng, std::size_t n, double ridge) {
  Matrix a = random_matrix(rng, n, n);
  Matrix s = mat_mul_tn(a, a);
  for (std::size_t i = 0; i < n; ++i) s(i, i) += ridge;
  return s;
}

Matrix naive_mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

}  // namespace

TEST_CASE("cholesky factors a known 2x2 exactly") {
  Matrix a(2, 2);
  a(0, 0) = 4.0; a(0, 1) = 2.0;
  a(1, 0) = 2.0; a(1, 1) = 3.0;
  Matrix l;
  REQUIRE(cholesky(a, l));
  CHECK(l(0, 0) == 2.0);
  CHECK(l(0, 1) == 0.0);
  CHECK(l(1, 0) == 1.0);
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  // det(a) = 8, so logdet = log 8.
  CHECK(chol_logdet(l) == doctest::Approx(std::log(8.0)).epsilon(1e-14));
}

TEST_CASE("cholesky round-trips random SPD matrices") {
  Rng rng(42);
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(8),
                        std::size_t(20)}) {
    Matrix a = random_spd(rng, n, 0.5);
    Matrix l;
    REQUIRE(cholesky(a, l));
    Matrix back = mat_mul_nt(l, l);
    CHECK(max_abs_diff(a, back) <= 1e-11 * (1.0 + double(n)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) CHECK(l(i, j) == 0.0);
  }
}

TEST_CASE("cholesky rejects non positive definite input") {
  Matrix a(2, 2);
  a(0, 0) = 1.0; a(0, 1) = 2.0;
  a(1, 0) = 2.0; a(1, 1) = 1.0;  // eigenvalues 3 and -1
  Matrix l;
  CHECK_FALSE(cholesky(a, l));

  Matrix z(2, 2);  // all zero, pivot not strictly positive
  CHECK_FALSE(cholesky(z, l));

  Matrix nf(2, 2);
  nf(0, 0) = std::nan("");
  nf(1, 1) = 1.0;
  CHECK_FALSE(cholesky(nf, l));
}

TEST_CASE("triangular solves invert the factor action") {
  Rng rng(7);
  const std::size_t n = 12;
  Matrix a = random_spd(rng, n, 1.0);
  Matrix l;
  REQUIRE(cholesky(a, l));

  Vector x0(n);
  for (auto& v : x0) v = rng.normal();

  // b = L x0, solve L x = b, recover x0.
  Vector b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) b[i] += l(i, j) * x0[j];
  Vector x = b;
  solve_lower_inplace(l, x.data());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(x[i] - x0[i]) <= 1e-10);

  // c = L^T x0, solve L^T x = c, recover x0.
  Vector c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) c[i] += l(j, i) * x0[j];
  x = c;
  solve_lower_t_inplace(l, x.data());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(std::abs(x[i] - x0[i]) <= 1e-10);
}

TEST_CASE("spd_inverse gives the identity both ways and stays symmetric") {
  Rng rng(11);
  for (std::size_t n : {std::size_t(2), std::size_t(5), std::size_t(15)}) {
    Matrix a = random_spd(rng, n, 1.0);
    Matrix inv = spd_inverse(a);
    CHECK(max_abs_diff(mat_mul(a, inv), Matrix::identity(n)) <= 1e-10);
    CHECK(max_abs_diff(mat_mul(inv, a), Matrix::identity(n)) <= 1e-10);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(inv(i, j) == inv(j, i));
  }

  Matrix bad(2, 2);
  bad(0, 0) = 1.0; bad(0, 1) = 2.0;
  bad(1, 0) = 2.0; bad(1, 1) = 1.0;
  CHECK_THROWS_AS((void)spd_inverse(bad), std::domain_error);
}

TEST_CASE("sym_eigen reconstructs, orders, and orthonormalizes") {
  Rng rng(13);
  for (std::size_t n : {std::size_t(2), std::size_t(4), std::size_t(9),
                        std::size_t(16)}) {
    Matrix a = random_spd(rng, n, 0.1);
    Vector evals;
    Matrix v;
    sym_eigen(a, evals, v);

    REQUIRE(evals.size() == n);
    for (std::size_t i = 0; i + 1 < n; ++i) CHECK(evals[i] >= evals[i + 1]);
    for (std::size_t i = 0; i < n; ++i) CHECK(evals[i] > 0.0);

    // V^T V = I
    Matrix vtv = mat_mul_tn(v, v);
    CHECK(max_abs_diff(vtv, Matrix::identity(n)) <= 1e-10);

    // A = V diag(evals) V^T
    Matrix vd = v;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) vd(i, j) *= evals[j];
    Matrix back = mat_mul_nt(vd, v);
    CHECK(max_abs_diff(a, back) <= 1e-10 * (1.0 + double(n)));
  }
}

TEST_CASE("sym_eigen handles a known diagonal-plus-rank-one case") {
  // a = I_2 + [1 1; 1 1] has eigenvalues 3 and 1.
  Matrix a(2, 2);
  a(0, 0) = 2.0; a(0, 1) = 1.0;
  a(1, 0) = 1.0; a(1, 1) = 2.0;
  Vector evals;
  Matrix v;
  sym_eigen(a, evals, v);
  CHECK(evals[0] == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(evals[1] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("qr_square produces orthonormal Q and upper triangular R") {
  Rng rng(17);
  for (std::size_t n : {std::size_t(1), std::size_t(3), std::size_t(8)}) {
    Matrix a = random_matrix(rng, n, n);
    Matrix q, r;
    qr_square(a, q, r);

    CHECK(max_abs_diff(mat_mul_tn(q, q), Matrix::identity(n)) <= 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(r(i, j)) <= 1e-13);
    CHECK(max_abs_diff(mat_mul(q, r), a) <= 1e-12 * (1.0 + double(n)));
  }
}

TEST_CASE("matrix products match naive triple loops") {
  Rng rng(19);
  const std::size_t m = 7, k = 5, n = 9;
  Matrix a = random_matrix(rng, m, k);
  Matrix b = random_matrix(rng, k, n);
  CHECK(max_abs_diff(mat_mul(a, b), naive_mul(a, b)) <= 1e-13);

  Matrix at = transpose(a);
  CHECK(max_abs_diff(mat_mul_tn(at, b), naive_mul(a, b)) <= 1e-13);

  Matrix bt = transpose(b);
  CHECK(max_abs_diff(mat_mul_nt(a, bt), naive_mul(a, b)) <= 1e-13);
}

TEST_CASE("transpose and max_abs_diff basics") {
  Matrix a(2, 3);
  a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
  a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
  Matrix t = transpose(a);
  REQUIRE(t.rows() == 3);
  REQUIRE(t.cols() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(t(j, i) == a(i, j));

  Matrix b = a;
  b(1, 2) = 6.5;
  CHECK(max_abs_diff(a, b) == 0.5);
  CHECK(max_abs_diff(a, a) == 0.0);
}
