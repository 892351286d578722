#ifndef FASELECT_LINALG_HPP
#define FASELECT_LINALG_HPP

#include "faselect/matrix.hpp"

namespace faselect {

// Cholesky A = L L^T, L lower triangular. Returns false when a pivot is not
// strictly positive or not finite; L is then unusable.
bool cholesky(const Matrix& a, Matrix& l);

// 2 * sum_i log L(i,i)
double chol_logdet(const Matrix& l);

// In-place triangular solves against the factor from cholesky().
void solve_lower_inplace(const Matrix& l, double* x);    // L x = b
void solve_lower_t_inplace(const Matrix& l, double* x);  // L^T x = b

// Inverse of an SPD matrix via Cholesky. Throws std::domain_error.
Matrix spd_inverse(const Matrix& a);

// Symmetric eigendecomposition by cyclic Jacobi rotations.
// Eigenvalues returned in descending order, eigenvectors as columns of v.
void sym_eigen(const Matrix& a, Vector& evals, Matrix& v);

// Householder QR of a square matrix, Q explicit. a = q * r.
void qr_square(const Matrix& a, Matrix& q, Matrix& r);

// c = a * b, c = a^T * b, c = a * b^T
Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_mul_tn(const Matrix& a, const Matrix& b);
Matrix mat_mul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// max_ij |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace faselect

#endif
