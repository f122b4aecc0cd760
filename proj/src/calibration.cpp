#include "flashsim/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "flashsim/instruments.hpp"

namespace flashsim {

ProbabilityEstimate CoincidenceTally::probability_from(Channel emitter) const {
  return flash_probability(rate_from(emitter), singles_rate(emitter), duration_s);
}

CoincidenceTally& CoincidenceTally::operator+=(const CoincidenceTally& o) {
  count12 += o.count12;
  count21 += o.count21;
  singles1 += o.singles1;
  singles2 += o.singles2;
  duration_s += o.duration_s;
  return *this;
}

CoincidenceTally tally_run(const EventTrace& trace, const CoincidenceParams& params) {
  CoincidenceTally t;
  t.duration_s = trace.duration_s;
  t.singles1 = trace[Channel::Apd1].size();
  t.singles2 = trace[Channel::Apd2].size();
  CoincidenceParams p = params;
  p.delayed_channel = Channel::Apd1;
  t.count12 = coincidence_count(trace[Channel::Apd1], trace[Channel::Apd2], p, trace.duration_s).count;
  p.delayed_channel = Channel::Apd2;
  t.count21 = coincidence_count(trace[Channel::Apd1], trace[Channel::Apd2], p, trace.duration_s).count;
  return t;
}

CoincidenceTally tally_coincidences(const SimConfig& config, std::uint64_t scenario,
                                    std::optional<std::pair<double, double>> emission_band) {
  const auto chunks = static_cast<std::uint64_t>(std::max(1.0, std::ceil(config.duration_s / kChunkSeconds)));
  SimConfig chunk = config;
  chunk.duration_s = config.duration_s / static_cast<double>(chunks);
  CoincidenceTally total;
  for (std::uint64_t k = 0; k < chunks; ++k) {
    RunOptions opts;
    opts.scenario = (scenario << 20) | k;
    opts.emission_band = emission_band;
    total += tally_run(run_simulation(chunk, opts), config.coincidence);
  }
  return total;
}

namespace {

/// Largest S * T * QE product over the emission support; zero means no
/// photon can ever reach the other detector.
double coupling_bound(const SimConfig& config, Channel emitter) {
  const auto& src = config.apd[index(emitter)];
  const auto& dst = config.apd[index(other(emitter))];
  const auto& knots = src.flash_spectrum.knots();
  if (knots.empty()) return 0.0;
  const double lo = knots.front().wavelength_nm;
  const double hi = knots.back().wavelength_nm;
  double best = 0.0;
  for (double nm = lo; nm <= hi; nm += 0.05) {
    double t = src.flash_spectrum.eval(nm) * dst.qe_curve.eval(nm);
    for (std::size_t s = 0; s < 3 && t > 0.0; ++s) t *= config.topology.segment_transmission(s, nm);
    best = std::max(best, t);
  }
  return best;
}

}  // namespace

double calibrate_flash_mu(double target, const SimConfig& config, const CalibrationOptions& options) {
  if (target < 0.0 || target >= 1.0) throw CalibrationError("target probability must be in [0, 1)");
  if (target == 0.0) return 0.0;
  if (coupling_bound(config, options.emitter) <= 0.0) throw CalibrationError("unreachable target");

  SimConfig cfg = config;
  cfg.duration_s = options.run_duration_s;
  auto& mu = cfg.apd[index(options.emitter)].flash_mean_photons;
  auto measure = [&](double m) {
    mu = m;
    return tally_coincidences(cfg, 0x0CA1).probability_from(options.emitter).p;
  };

  constexpr double kMuMax = 500.0;
  if (measure(0.0) >= target) return 0.0;

  // Pilot run for a first-order estimate, then bracket around it.
  double pilot = std::max(config.apd[index(options.emitter)].flash_mean_photons, 1e-3);
  double p_pilot = measure(pilot);
  while (p_pilot <= 0.0) {
    pilot *= 8.0;
    if (pilot > kMuMax) throw CalibrationError("unreachable target");
    p_pilot = measure(pilot);
  }
  const double estimate = pilot * target / p_pilot;

  double lo = 0.0;
  double hi = std::min(estimate * 1.25, kMuMax);
  while (measure(hi) < target) {
    lo = hi;
    if (hi >= kMuMax) throw CalibrationError("unreachable target");
    hi = std::min(hi * 2.0, kMuMax);
  }
  if (lo == 0.0 && measure(0.8 * estimate) < target) lo = 0.8 * estimate;

  for (int i = 0; i < options.max_iterations && (hi - lo) > options.rel_tolerance * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (measure(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace flashsim
