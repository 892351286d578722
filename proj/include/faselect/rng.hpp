#pragma once

#include <cstdint>

namespace faselect {

// xoshiro256++ with splitmix64 seeding. Deterministic across platforms;
// substream(base, i) derives independent streams from one base seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform on the open interval (0,1)
  double uniform();

  // standard normal, Box-Muller with one cached draw
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; any shape > 0, unit rate
  double gamma(double shape);

  // density b^a/Gamma(a) x^{-a-1} exp(-b/x)
  double inverse_gamma(double shape, double scale);

  double chi_square(double df);

  // normal(mean, sd) conditioned on being > 0
  double truncated_normal_pos(double mean, double sd);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

// independent seed for stream i of a base seed
std::uint64_t substream(std::uint64_t base, std::uint64_t i);

// inverse standard normal CDF; accurate to ~1e-15 over (0,1)
double normal_quantile(double p);

double normal_cdf(double x);

}  // namespace faselect
