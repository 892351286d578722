#include "faselect/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include "faselect/simd/kernels.hpp"

namespace faselect {

bool cholesky(const Matrix& a, Matrix& l) {
  const std::size_t n = a.rows();
  if (a.cols() != n) return false;
  if (!l.same_shape(a)) l = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double* li = l.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const double* lj = l.row(j);
      double s = a(i, j) - simd::dot(li, lj, j);
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        li[j] = std::sqrt(s);
      } else {
        li[j] = s / lj[j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) li[j] = 0.0;
  }
  return true;
}

double chol_logdet(const Matrix& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

void solve_lower_inplace(const Matrix& l, double* x) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* li = l.row(i);
    x[i] = (x[i] - simd::dot(li, x, i)) / li[i];
  }
}

void solve_lower_t_inplace(const Matrix& l, double* x) {
  const std::size_t n = l.rows();
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l(j, ii) * x[j];
    x[ii] = s / l(ii, ii);
  }
}

Matrix spd_inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix l;
  if (!cholesky(a, l)) {
    throw std::domain_error("spd_inverse: matrix is not positive definite");
  }
  Matrix inv(n, n);
  Vector col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = (i == j) ? 1.0 : 0.0;
    solve_lower_inplace(l, col.data());
    solve_lower_t_inplace(l, col.data());
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  // symmetrize away the last rounding differences
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double m = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = m;
      inv(j, i) = m;
    }
  }
  return inv;
}

void sym_eigen(const Matrix& a, Vector& evals, Matrix& v) {
  const std::size_t n = a.rows();
  Matrix w = a;
  v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
    if (off < 1e-26 * (1.0 + simd::sumsq(w.data(), w.size()))) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double wip = w(i, p), wiq = w(i, q);
          w(i, p) = c * wip - s * wiq;
          w(i, q) = s * wip + c * wiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double wpi = w(p, i), wqi = w(q, i);
          w(p, i) = c * wpi - s * wqi;
          w(q, i) = s * wpi + c * wqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  evals.resize(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = w(i, i);

  // sort descending, carrying eigenvector columns along
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (evals[j] > evals[best]) best = j;
    if (best != i) {
      std::swap(evals[i], evals[best]);
      for (std::size_t r = 0; r < n; ++r) std::swap(v(r, i), v(r, best));
    }
  }
}

void qr_square(const Matrix& a, Matrix& q, Matrix& r) {
  const std::size_t n = a.rows();
  r = a;
  q = Matrix::identity(n);
  Vector h(n);
  for (std::size_t k = 0; k < n; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) norm2 += r(i, k) * r(i, k);
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    const double alpha = (r(k, k) >= 0.0) ? -norm : norm;
    double hn2 = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      h[i] = r(i, k) - ((i == k) ? alpha : 0.0);
      hn2 += h[i] * h[i];
    }
    if (hn2 == 0.0) continue;
    const double beta = 2.0 / hn2;
    // r <- (I - beta h h^T) r ; q <- q (I - beta h h^T)
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += h[i] * r(i, j);
      s *= beta;
      for (std::size_t i = k; i < n; ++i) r(i, j) -= s * h[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k; j < n; ++j) s += q(i, j) * h[j];
      s *= beta;
      for (std::size_t j = k; j < n; ++j) q(i, j) -= s * h[j];
    }
  }
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (ai[k] != 0.0) simd::axpy(ai[k], b.row(k), ci, b.cols());
    }
  }
  return c;
}

Matrix mat_mul_tn(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* ak = a.row(k);
    const double* bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      if (ak[i] != 0.0) simd::axpy(ak[i], bk, c.row(i), b.cols());
    }
  }
  return c;
}

Matrix mat_mul_nt(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      ci[j] = simd::dot(ai, b.row(j), a.cols());
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = std::abs(a.data()[i] - b.data()[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace faselect
