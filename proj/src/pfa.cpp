#include "faselect/pfa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "faselect/core.hpp"
#include "faselect/errors.hpp"
#include "faselect/linalg.hpp"
#include "faselect/rng.hpp"
#include "faselect/simd/kernels.hpp"

namespace faselect {

void PathConfig::validate() const {
  if (k_range.empty()) throw config_error("path: k_range must be nonempty");
  for (std::size_t k : k_range)
    if (k < 1) throw config_error("path: dimensions must be >= 1");
  if (!(tol > 0.0)) throw config_error("path: tol must be positive");
  if (max_iter < 1) throw config_error("path: max_iter must be >= 1");
  if (!(uniqueness_floor > 0.0))
    throw config_error("path: uniqueness_floor must be positive");
  if (restarts < 1) throw config_error("path: restarts must be >= 1");
}

double objective(const Matrix& b, const Vector& s, const Matrix& omega_bar,
                 double lambda) {
  if (!(lambda >= 0.0)) throw config_error("objective: lambda must be >= 0");
  double l1 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) l1 += std::abs(b.data()[i]);
  return stein_loss(assemble_cov(b, s), omega_bar) + lambda * l1;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

namespace detail {

EStep e_step(const Matrix& b, const Vector& s, const Matrix& omega_bar) {
  const std::size_t k = b.cols();
  const Matrix delta = spd_inverse(assemble_cov(b, s));
  const Matrix t = mat_mul(delta, omega_bar);  // p x p
  const Matrix u = mat_mul(delta, b);          // p x k
  EStep es;
  es.m1 = mat_mul_tn(b, t);  // k x p
  Matrix btu = mat_mul_tn(b, u);
  Matrix btw = mat_mul_tn(b, mat_mul(t, u));
  es.m2 = Matrix(k, k);
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t r = 0; r < k; ++r)
      es.m2(q, r) = ((q == r) ? 1.0 : 0.0) - btu(q, r) + btw(q, r);
  // symmetrize: both correction terms are symmetric up to roundoff
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t r = 0; r < q; ++r) {
      const double m = 0.5 * (es.m2(q, r) + es.m2(r, q));
      es.m2(q, r) = m;
      es.m2(r, q) = m;
    }
  return es;
}

void eigen_init(const Matrix& omega_bar, std::size_t k, double floor,
                Matrix& b, Vector& s) {
  const std::size_t p = omega_bar.rows();
  if (k < 1 || k > p)
    throw config_error("eigen init: need 1 <= k <= p, got k=" +
                       std::to_string(k));
  Vector evals;
  Matrix evecs;
  sym_eigen(omega_bar, evals, evecs);
  const double sigma0 = [&] {
    if (k >= p) return floor;
    double acc = 0.0;
    for (std::size_t q = k; q < p; ++q) acc += std::max(evals[q], 0.0);
    return std::max(acc / static_cast<double>(p - k), floor);
  }();
  b = Matrix(p, k);
  for (std::size_t q = 0; q < k; ++q) {
    const double load = std::sqrt(std::max(evals[q] - sigma0, 0.0));
    for (std::size_t j = 0; j < p; ++j) b(j, q) = load * evecs(j, q);
  }
  s.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    s[j] = std::max(omega_bar(j, j) - simd::dot(b.row(j), b.row(j), k), floor);
}

double lambda_max_from_fit(const Matrix& b, const Vector& s,
                           const Matrix& omega_bar, bool* fallback) {
  const std::size_t p = b.rows();
  const std::size_t k = b.cols();
  const EStep es = e_step(b, s, omega_bar);
  double analytic = 0.0;
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t q = 0; q < k; ++q)
      analytic = std::max(analytic, 2.0 * std::abs(es.m1(q, j)) / s[j]);

  // cross-check by central differences of the row surrogate at b_j = 0
  const auto surrogate = [&](std::size_t j, const Vector& row) {
    double quad = 0.0, lin = 0.0;
    for (std::size_t q = 0; q < k; ++q) {
      lin += es.m1(q, j) * row[q];
      for (std::size_t r = 0; r < k; ++r)
        quad += row[q] * es.m2(q, r) * row[r];
    }
    return (quad - 2.0 * lin) / s[j];
  };
  const double h = 1e-6;
  double numeric = 0.0;
  Vector row(k, 0.0);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t q = 0; q < k; ++q) {
      row[q] = h;
      const double gp = surrogate(j, row);
      row[q] = -h;
      const double gm = surrogate(j, row);
      row[q] = 0.0;
      numeric = std::max(numeric, std::abs((gp - gm) / (2.0 * h)));
    }
  double chosen = analytic;
  if (std::abs(numeric - analytic) > 1e-6 * std::max(1.0, analytic))
    chosen = numeric;
  if (!(chosen > 1e-8) || !std::isfinite(chosen)) {
    if (fallback) *fallback = true;
    return 1.0;
  }
  if (fallback) *fallback = false;
  return chosen;
}

}  // namespace detail

bool em_step(Matrix& b, Vector& s, const Matrix& omega_bar, double lambda,
             double floor) {
  const std::size_t p = b.rows();
  const std::size_t k = b.cols();
  detail::EStep es = detail::e_step(b, s, omega_bar);
  bool ridge = false;
  for (std::size_t q = 0; q < k; ++q)
    if (es.m2(q, q) < 1e-10) ridge = true;
  if (ridge)
    for (std::size_t q = 0; q < k; ++q) es.m2(q, q) += 1e-10;

  Vector mj(k);
  for (std::size_t j = 0; j < p; ++j) {
    double* bj = b.row(j);
    for (std::size_t q = 0; q < k; ++q) mj[q] = es.m1(q, j);
    const double thr = 0.5 * lambda * s[j];
    for (int pass = 0; pass < 100; ++pass) {
      double change = 0.0, scale = 1.0;
      for (std::size_t q = 0; q < k; ++q) {
        double c = mj[q];
        for (std::size_t r = 0; r < k; ++r)
          if (r != q) c -= es.m2(q, r) * bj[r];
        const double nv = soft_threshold(c, thr) / es.m2(q, q);
        change = std::max(change, std::abs(nv - bj[q]));
        scale = std::max(scale, std::abs(nv));
        bj[q] = nv;
      }
      if (change < 1e-13 * scale) break;
    }
    double quad = 0.0;
    for (std::size_t q = 0; q < k; ++q) {
      double acc = 0.0;
      for (std::size_t r = 0; r < k; ++r) acc += es.m2(q, r) * bj[r];
      quad += bj[q] * acc;
    }
    const double a =
        omega_bar(j, j) - 2.0 * simd::dot(bj, mj.data(), k) + quad;
    s[j] = std::max(floor, a);
  }
  return ridge;
}

namespace {

struct FitWork {
  Matrix b;
  Vector s;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool ridge = false;
};

FitWork run_em(const Matrix& omega_bar, double lambda, const PathConfig& cfg,
               Matrix b, Vector s) {
  FitWork w;
  double obj = objective(b, s, omega_bar, lambda);
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    w.ridge = em_step(b, s, omega_bar, lambda, cfg.uniqueness_floor) || w.ridge;
    const double nobj = objective(b, s, omega_bar, lambda);
    w.iterations = it;
    if (std::abs(nobj - obj) < cfg.tol * std::max(1.0, std::abs(obj))) {
      obj = nobj;
      w.converged = true;
      break;
    }
    obj = nobj;
  }
  w.b = std::move(b);
  w.s = std::move(s);
  w.objective = obj;
  return w;
}

PenalizedFit fit_one(const Matrix& omega_bar, std::size_t k, double lambda,
                     std::size_t lambda_index, const PathConfig& cfg,
                     const Matrix& warm_b, const Vector& warm_s,
                     const FitWork* precomputed = nullptr) {
  FitWork best =
      precomputed ? *precomputed : run_em(omega_bar, lambda, cfg, warm_b, warm_s);
  for (std::size_t r = 1; r < cfg.restarts; ++r) {
    Rng rng(substream(0xFA5E1EC7ull ^ (static_cast<std::uint64_t>(k) << 40) ^
                          (static_cast<std::uint64_t>(lambda_index) << 20),
                      r));
    Matrix rb(omega_bar.rows(), k);
    for (std::size_t i = 0; i < rb.size(); ++i)
      rb.data()[i] = 0.5 * rng.normal();
    Vector rs(omega_bar.rows());
    for (std::size_t j = 0; j < rs.size(); ++j)
      rs[j] = std::max(0.5 * omega_bar(j, j), cfg.uniqueness_floor);
    FitWork cand = run_em(omega_bar, lambda, cfg, std::move(rb), std::move(rs));
    if (cand.objective < best.objective) best = std::move(cand);
  }

  PenalizedFit fit;
  fit.k_tilde = k;
  fit.lambda = lambda;
  fit.lambda_index = lambda_index;
  fit.objective = best.objective;
  fit.iterations = best.iterations;
  fit.converged = best.converged;
  fit.ridge_applied = best.ridge;
  for (std::size_t q = 0; q < k; ++q) {
    double colmax = 0.0;
    for (std::size_t j = 0; j < omega_bar.rows(); ++j)
      colmax = std::max(colmax, std::abs(best.b(j, q)));
    if (colmax < 1e-12) fit.zero_columns.push_back(q);
  }
  fit.effective_k = k - fit.zero_columns.size();
  for (double v : best.s)
    if (v == cfg.uniqueness_floor) fit.floor_active = true;
  fit.b_hat = std::move(best.b);
  fit.sigma_hat = std::move(best.s);
  return fit;
}

// the lambda_0 solution plus the grid derived from it
struct GridWithBase {
  std::vector<double> grid;
  FitWork base;
  bool fallback = false;
};

GridWithBase grid_from_base(const Matrix& omega_bar, std::size_t k,
                            std::size_t l, const PathConfig& cfg) {
  GridWithBase g;
  Matrix b;
  Vector s;
  detail::eigen_init(omega_bar, k, cfg.uniqueness_floor, b, s);
  g.base = run_em(omega_bar, 0.0, cfg, std::move(b), std::move(s));
  g.grid.push_back(0.0);
  if (l == 0) return g;
  const double lmax =
      detail::lambda_max_from_fit(g.base.b, g.base.s, omega_bar, &g.fallback);
  // geometric spacing over three decades up to the threshold
  for (std::size_t i = 1; i <= l; ++i) {
    const double expo =
        (l == 1) ? 0.0
                 : -3.0 * static_cast<double>(l - i) / static_cast<double>(l - 1);
    g.grid.push_back(lmax * std::pow(10.0, expo));
  }
  return g;
}

}  // namespace

std::vector<double> lambda_grid(const Matrix& omega_bar, std::size_t k_tilde,
                                std::size_t l) {
  PathConfig cfg;
  cfg.k_range = {k_tilde};
  return grid_from_base(omega_bar, k_tilde, l, cfg).grid;
}

FitPath fit_path(const Matrix& omega_bar, const PathConfig& config) {
  config.validate();
  {
    Matrix l;
    if (!cholesky(omega_bar, l))
      throw std::domain_error("fit_path: target covariance not positive definite");
  }
  FitPath fp;
  fp.p = omega_bar.rows();
  fp.omega_bar_digest = cov_digest(omega_bar);
  std::vector<std::size_t> ks = config.k_range;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (std::size_t k : ks) {
    if (k > fp.p)
      throw config_error("fit_path: dimension " + std::to_string(k) +
                         " exceeds p");
    GridWithBase g;
    try {
      g = grid_from_base(omega_bar, k, config.path_length, config);
    } catch (const std::domain_error& e) {
      throw numeric_error("fit_path at (k=" + std::to_string(k) +
                          ", lambda=0): " + e.what());
    }
    Matrix warm_b = g.base.b;
    Vector warm_s = g.base.s;
    for (std::size_t idx = 0; idx < g.grid.size(); ++idx) {
      PenalizedFit fit;
      try {
        if (idx == 0) {
          // the grid construction already solved lambda_0 from the cold start
          fit = fit_one(omega_bar, k, 0.0, 0, config, g.base.b, g.base.s,
                        &g.base);
        } else {
          fit = fit_one(omega_bar, k, g.grid[idx], idx, config, warm_b, warm_s);
        }
      } catch (const std::domain_error& e) {
        throw numeric_error("fit_path at (k=" + std::to_string(k) +
                            ", lambda=" + std::to_string(g.grid[idx]) +
                            "): " + e.what());
      }
      warm_b = fit.b_hat;
      warm_s = fit.sigma_hat;
      fp.fits.push_back(std::move(fit));
    }
  }
  return fp;
}

std::string cov_digest(const Matrix& omega) {
  std::uint64_t hv = 1469598103934665603ull;
  const auto mix = [&hv](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hv ^= (v >> (8 * i)) & 0xFFu;
      hv *= 1099511628211ull;
    }
  };
  mix(omega.rows());
  mix(omega.cols());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    std::uint64_t bits;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&bits, &omega.data()[i], 8);
    mix(bits);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hv));
  return buf;
}

void write_fitpath_json(const FitPath& path, const std::string& file) {
  nlohmann::json j;
  j["omega_bar_digest"] = path.omega_bar_digest;
  j["p"] = path.p;
  auto& fits = j["fits"] = nlohmann::json::array();
  for (const PenalizedFit& f : path.fits) {
    nlohmann::json jf;
    jf["k_tilde"] = f.k_tilde;
    jf["lambda"] = f.lambda;
    jf["lambda_index"] = f.lambda_index;
    jf["objective"] = f.objective;
    jf["iterations"] = f.iterations;
    jf["converged"] = f.converged;
    jf["zero_columns"] = f.zero_columns;
    jf["effective_k"] = f.effective_k;
    jf["ridge_applied"] = f.ridge_applied;
    jf["floor_active"] = f.floor_active;
    auto& rows = jf["b_hat"] = nlohmann::json::array();
    for (std::size_t i = 0; i < f.b_hat.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t q = 0; q < f.b_hat.cols(); ++q)
        row.push_back(f.b_hat(i, q));
      rows.push_back(std::move(row));
    }
    jf["sigma_hat"] = f.sigma_hat;
    fits.push_back(std::move(jf));
  }
  std::ofstream out(file);
  if (!out) throw io_error("cannot open for writing: " + file);
  out << j.dump(1) << '\n';
  if (!out) throw io_error("write failed: " + file);
}

FitPath read_fitpath_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot open for reading: " + file);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("fitpath json parse error in " + file + ": " + e.what());
  }
  FitPath fp;
  try {
    fp.omega_bar_digest = j.at("omega_bar_digest").get<std::string>();
    fp.p = j.at("p").get<std::size_t>();
    for (const auto& jf : j.at("fits")) {
      PenalizedFit f;
      f.k_tilde = jf.at("k_tilde").get<std::size_t>();
      f.lambda = jf.at("lambda").get<double>();
      f.lambda_index = jf.at("lambda_index").get<std::size_t>();
      f.objective = jf.at("objective").get<double>();
      f.iterations = jf.at("iterations").get<std::size_t>();
      f.converged = jf.at("converged").get<bool>();
      f.zero_columns = jf.at("zero_columns").get<std::vector<std::size_t>>();
      f.effective_k = jf.at("effective_k").get<std::size_t>();
      f.ridge_applied = jf.at("ridge_applied").get<bool>();
      f.floor_active = jf.at("floor_active").get<bool>();
      const auto& rows = jf.at("b_hat");
      const std::size_t p = rows.size();
      if (p != fp.p) throw io_error("fitpath json: loadings row count mismatch");
      const std::size_t k = f.k_tilde;
      f.b_hat = Matrix(p, k);
      for (std::size_t i = 0; i < p; ++i) {
        const auto& row = rows.at(i);
        if (row.size() != k)
          throw io_error("fitpath json: loadings column count mismatch");
        for (std::size_t q = 0; q < k; ++q)
          f.b_hat(i, q) = row.at(q).get<double>();
      }
      f.sigma_hat = jf.at("sigma_hat").get<Vector>();
      if (f.sigma_hat.size() != p)
        throw io_error("fitpath json: uniqueness length mismatch");
      fp.fits.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw io_error("fitpath json missing fields in " + file + ": " + e.what());
  }
  return fp;
}

}  // namespace faselect
