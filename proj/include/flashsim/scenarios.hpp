#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flashsim/analysis.hpp"
#include "flashsim/calibration.hpp"
#include "flashsim/instruments.hpp"
#include "flashsim/model.hpp"

namespace flashsim {

/// Stream keys of the built-in experiments. Scan point k uses kScanKey + k.
namespace scenario_key {
inline constexpr std::uint64_t kHistogram = 1;
inline constexpr std::uint64_t kCoincidence = 2;
inline constexpr std::uint64_t kFiltered = 3;
inline constexpr std::uint64_t kBlocked = 4;
inline constexpr std::uint64_t kResponse = 5;
inline constexpr std::uint64_t kScan = 0x1000;
}  // namespace scenario_key

/// Copy of `config` with the configured bandpass installed in B-C.
SimConfig with_bandpass(const SimConfig& config);
/// Copy of `config` with the B-C segment made opaque.
SimConfig with_blocked_path(const SimConfig& config);

struct HistogramReport {
  Histogram histogram;
  std::vector<Peak> peaks;
};

inline constexpr double kDefaultProminence = 5.0;

/// Oscilloscope experiment: trigger on scope.trigger_channel, record the
/// other channel delayed by scope.electrical_delay.
HistogramReport run_histogram(const SimConfig& config, bool filtered, double min_prominence = kDefaultProminence,
                              std::uint64_t scenario = scenario_key::kHistogram);

/// Raw trace of the first chunk of the histogram experiment.
EventTrace histogram_trace(const SimConfig& config, bool filtered);

struct CoincidenceRow {
  std::string direction;
  std::uint64_t count = 0;
  double duration_s = 0.0;
  double rate_hz = 0.0;
  double rate_err_hz = 0.0;
  double emitter_rate_hz = 0.0;
  ProbabilityEstimate probability;
};

struct SuppressionRow {
  std::string direction;
  Suppression suppression;
};

struct CoincidenceReport {
  std::vector<CoincidenceRow> rows;
  std::vector<SuppressionRow> suppression;
  /// r1 * r2 * w from the blocked run's singles, per direction.
  double accidental_oracle_hz = 0.0;
};

/// Both directions on the open path, optionally the same with the bandpass,
/// and a blocked-path accidentals run.
CoincidenceReport run_coincidence(const SimConfig& config, bool filtered);

struct ScanOptions {
  int samples = 84;
  double angle_step_deg = 0.28;
  double start_nm = 1000.0;
  double seconds_per_point = 60.0;
  /// Flash emission is restricted to centre +- band_fwhm * response FWHM;
  /// 0 disables the restriction.
  double band_fwhm = 6.0;
};

/// Monochromator angle sweep. Each point runs its own seeded coincidence
/// measurement; points are merged in angle order.
SpectrumTable run_spectral_scan(const SimConfig& config, const ScanOptions& options);

/// Centre wavelengths visited by run_spectral_scan.
std::vector<double> scan_wavelengths(const MonochromatorParams& mono, const ScanOptions& options);

/// Fraction of monochromatic photons at `laser_nm` that cross a lossless
/// link with the monochromator set to each centre wavelength.
std::vector<double> run_instrument_response(const MonochromatorParams& mono, double laser_nm,
                                            const std::vector<double>& centers_nm, std::uint64_t photons,
                                            std::uint64_t seed);

}  // namespace flashsim
