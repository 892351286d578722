#pragma once

#include <string>
#include <vector>

#include "faselect/matrix.hpp"

namespace faselect {

struct PathConfig {
  std::vector<std::size_t> k_range;  // candidate dimensions, ascending
  std::size_t path_length = 10;      // count of nonzero penalty levels;
                                     // 0 restricts the path to lambda = 0
  double tol = 1e-8;                 // relative objective-change threshold
  std::size_t max_iter = 2000;
  double uniqueness_floor = 1e-6;
  std::size_t restarts = 1;          // extra deterministic random inits beyond 1

  void validate() const;
};

struct PenalizedFit {
  Matrix b_hat;       // p x k_tilde
  Vector sigma_hat;   // length p, entries >= uniqueness_floor
  std::size_t k_tilde = 0;
  double lambda = 0.0;
  std::size_t lambda_index = 0;
  double objective = 0.0;  // final penalized objective
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::size_t> zero_columns;  // columns with max |entry| < 1e-12
  std::size_t effective_k = 0;
  bool ridge_applied = false;  // factor second-moment matrix needed a ridge
  bool floor_active = false;   // some uniqueness pinned at the floor
};

struct FitPath {
  std::vector<PenalizedFit> fits;
  std::string omega_bar_digest;
  std::size_t p = 0;
};

// log|BB^T + diag(S)| + tr((BB^T + diag(S))^-1 omega_bar) + lambda * sum|B|
double objective(const Matrix& b, const Vector& s, const Matrix& omega_bar,
                 double lambda);

double soft_threshold(double z, double gamma);

// One EM sweep in place: expectation matrices from the current iterate, then
// per-row cyclic coordinate descent on the loadings and a closed-form floored
// uniqueness update. Returns true when the factor second-moment matrix needed
// a diagonal ridge. The penalized objective never increases.
bool em_step(Matrix& b, Vector& s, const Matrix& omega_bar, double lambda,
             double floor);

// {0, geometric path of l values ending at the full-shrinkage threshold}
std::vector<double> lambda_grid(const Matrix& omega_bar, std::size_t k_tilde,
                                std::size_t l);

// full (k_tilde, lambda) sweep with warm starts along each penalty path
FitPath fit_path(const Matrix& omega_bar, const PathConfig& config);

// FNV-1a over dimensions and entry bytes, 16 hex digits
std::string cov_digest(const Matrix& omega);

void write_fitpath_json(const FitPath& path, const std::string& file);
FitPath read_fitpath_json(const std::string& file);

namespace detail {
struct EStep {
  Matrix m1;  // k x p cross second moments
  Matrix m2;  // k x k factor second moments
};
EStep e_step(const Matrix& b, const Vector& s, const Matrix& omega_bar);

// principal-eigenpair start; also returns the implied uniqueness
void eigen_init(const Matrix& omega_bar, std::size_t k, double floor,
                Matrix& b, Vector& s);

// full-shrinkage penalty threshold read off a converged unpenalized solution,
// cross-checked by central differences on the EM surrogate; degenerate or
// non-finite thresholds fall back to 1 with *fallback set
double lambda_max_from_fit(const Matrix& b, const Vector& s,
                           const Matrix& omega_bar, bool* fallback);
}  // namespace detail

}  // namespace faselect
