#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

#include "flashsim/analysis.hpp"
#include "flashsim/engine.hpp"
#include "flashsim/model.hpp"

namespace flashsim {

/// Coincidence counts in both directions plus the singles of one run.
/// 1->2 delays channel 1 by the coincidence electrical delay, 2->1 delays
/// channel 2 by the same amount.
struct CoincidenceTally {
  std::uint64_t count12 = 0;
  std::uint64_t count21 = 0;
  std::uint64_t singles1 = 0;
  std::uint64_t singles2 = 0;
  double duration_s = 0.0;

  double singles_rate(Channel c) const {
    return static_cast<double>(c == Channel::Apd1 ? singles1 : singles2) / duration_s;
  }
  std::uint64_t count_from(Channel emitter) const { return emitter == Channel::Apd1 ? count12 : count21; }
  double rate_from(Channel emitter) const { return static_cast<double>(count_from(emitter)) / duration_s; }
  ProbabilityEstimate probability_from(Channel emitter) const;
  CoincidenceTally& operator+=(const CoincidenceTally& o);
};

/// Runs longer than this are split into independent replicas so traces stay
/// bounded in memory.
inline constexpr double kChunkSeconds = 600.0;

CoincidenceTally tally_run(const EventTrace& trace, const CoincidenceParams& params);

/// Simulates config.duration_s in chunks of at most kChunkSeconds, each with
/// its own stream key derived from `scenario`, and sums the tallies.
CoincidenceTally tally_coincidences(const SimConfig& config, std::uint64_t scenario,
                                    std::optional<std::pair<double, double>> emission_band = std::nullopt);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationOptions {
  Channel emitter = Channel::Apd1;
  /// Simulated time per evaluation; every evaluation reuses the same streams.
  double run_duration_s = 600.0;
  /// Bisection stops once the bracket is this narrow relative to its top.
  double rel_tolerance = 2e-3;
  int max_iterations = 40;
};

/// Mean flash photon number of the emitter that makes the simulated
/// coincidence probability (coincidences / emitter singles) equal `target`.
/// Bisection on mu with common random numbers across evaluations.
double calibrate_flash_mu(double target_prob, const SimConfig& config, const CalibrationOptions& options = {});

}  // namespace flashsim
