#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flashsim/instruments.hpp"
#include "flashsim/model.hpp"

namespace flashsim {

struct Peak {
  double center_ps = 0.0;
  double height = 0.0;
  double fwhm_ps = 0.0;
  double area = 0.0;
};

/// Local maxima that stand min_prominence * sqrt(baseline) above the median
/// bin count. Widths come from linear interpolation at half height above the
/// baseline; maxima closer than one FWHM to a taller peak are merged into it.
/// Result is ordered by centre.
std::vector<Peak> find_peaks(const Histogram& h, double min_prominence);

/// Median bin count, used as the flat background level.
double histogram_baseline(const Histogram& h);

struct ProbabilityEstimate {
  double p = 0.0;
  double sigma = 0.0;
};

/// Poisson upper limit (84% one-sided) used in place of sqrt(0) counts.
inline constexpr double kZeroCountUpper = 1.841;

/// p = coinc_rate / emitter_rate with counting error
/// p * (1/sqrt(C) + 1/(2 sqrt(S))), C and S the counts over `duration_s`.
ProbabilityEstimate flash_probability(double coinc_rate, double emitter_rate, double duration_s);

struct Suppression {
  double factor = 0.0;
  /// True when the filtered probability was zero and its upper limit was used.
  bool lower_bound = false;
};

Suppression suppression_factor(const ProbabilityEstimate& unfiltered, const ProbabilityEstimate& filtered);
double suppression_factor(double p_unfiltered, double p_filtered);

/// r1 * r2 * w for independent streams.
double accidental_rate(double r1, double r2, TimePs window);

/// Mean photon number leaving the device implied by a detection probability.
double photon_number_bound(double p_detected, double qe, double channel_transmission);

/// Raw coincidence counts at one monochromator setting.
struct ScanPoint {
  double lambda_nm = 0.0;
  std::uint64_t count12 = 0;
  std::uint64_t count21 = 0;
  double singles1 = 0.0;
  double singles2 = 0.0;
  double duration_s = 0.0;
  TimePs window{500};
};

struct SpectrumRow {
  double lambda_nm = 0.0;
  double rate12 = 0.0;
  double err12 = 0.0;
  double rate21 = 0.0;
  double err21 = 0.0;
  double baseline = 0.0;

  bool operator==(const SpectrumRow&) const = default;
};

using SpectrumTable = std::vector<SpectrumRow>;

/// Rates sorted by wavelength with the accidental baseline of each point.
/// No efficiency correction is applied.
SpectrumTable assemble_spectrum(std::span<const ScanPoint> points);

/// Index of the largest value of the chosen column.
std::size_t argmax_rate12(const SpectrumTable& table);
std::size_t argmax_rate21(const SpectrumTable& table);

struct ResponseShape {
  double peak = 0.0;
  double center = 0.0;
  double fwhm = 0.0;
};

/// Peak value and half-maximum width of a sampled curve y(x), x increasing.
ResponseShape response_shape(std::span<const double> x, std::span<const double> y);

}  // namespace flashsim
