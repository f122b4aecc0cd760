#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flashsim {

/// What a random stream is used for. Streams are keyed by
/// (seed, scenario, channel, purpose) so adding a purpose never shifts the
/// draws seen by an existing one.
enum class StreamPurpose : std::uint32_t {
  DarkCounts = 1,
  FlashCount = 2,
  FlashWavelength = 3,
  Propagation = 4,
  Detection = 5,
  Jitter = 6,
  Afterpulse = 7,
  Calibration = 8,
  Instrument = 9,
};

/// Portable random stream: std::mt19937_64 seeded through std::seed_seq,
/// both of which are fully specified by the standard. Distributions are
/// implemented here rather than with <random>'s, whose algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t scenario = 0, std::uint32_t channel = 0,
               StreamPurpose purpose = StreamPurpose::DarkCounts);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double mean) { return -mean * std::log(uniform_pos()); }
  /// Box-Muller, one variate per call.
  double normal(double mean, double sigma);
  /// Inverse-CDF sampling with a single uniform, so the result is
  /// non-decreasing in `mean` for a fixed stream position.
  std::uint32_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace flashsim
