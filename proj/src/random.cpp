#include "flashsim/random.hpp"

#include <cmath>
#include <numbers>

namespace flashsim {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t scenario, std::uint32_t channel,
                            StreamPurpose purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(scenario), static_cast<std::uint32_t>(scenario >> 32), channel,
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t scenario, std::uint32_t channel, StreamPurpose purpose)
    : engine_(make_engine(seed, scenario, channel, purpose)) {}

double Rng::normal(double mean, double sigma) {
  if (sigma == 0.0) return mean;
  const double u1 = uniform_pos();
  const double u2 = uniform();
  return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint32_t Rng::poisson(double mean) {
  const double u = uniform();
  if (mean <= 0.0) return 0;
  // Walk the CDF in log space so large means do not underflow exp(-mean).
  double log_p = -mean;
  double cdf = std::exp(log_p);
  std::uint32_t k = 0;
  const double log_mean = std::log(mean);
  while (u >= cdf) {
    ++k;
    log_p += log_mean - std::log(static_cast<double>(k));
    const double term = std::exp(log_p);
    cdf += term;
    if (term < 1e-300 && static_cast<double>(k) > mean) break;
  }
  return k;
}

}  // namespace flashsim
