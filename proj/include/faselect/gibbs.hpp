#pragma once

#include <cstdint>

#include "faselect/core.hpp"
#include "faselect/datagen.hpp"

namespace faselect {

class Rng;

struct PriorConfig {
  enum class Family { unconstrained, plt };
  Family family = Family::unconstrained;
  double loading_shape = 1.0;  // inverse-gamma hyper for the loading variance eta
  double loading_scale = 1.0;
  double uniqueness_shape = 1.0;  // inverse-gamma hyper for each sigma_j^2
  double uniqueness_scale = 1.0;

  void validate() const;
};

struct ChainConfig {
  std::size_t k = 1;             // working factor dimension
  std::size_t iterations = 10000;  // total sweeps
  std::size_t burnin = 5000;       // discarded sweeps
  std::size_t thin = 1;            // keep every thin-th post-burnin sweep
  std::uint64_t seed = 1;

  void validate() const;  // burnin < iterations, thin >= 1, k >= 1, M >= 1
};

// Gibbs sampler for y_i = B f_i + eps_i with diagonal noise. Retains
// (iterations - burnin)/thin draws of (B, diag(Sigma)). Centers the data
// first when the dataset is not flagged centered.
PosteriorDraws run_gibbs(const Dataset& data, const PriorConfig& prior,
                         const ChainConfig& chain);

namespace detail {
// conditional draw of one uniqueness variance given its residual sum of squares
double sample_sigma2(Rng& rng, double shape, double scale, std::size_t n,
                     double rss);
}  // namespace detail

}  // namespace faselect
