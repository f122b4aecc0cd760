#include "flashsim/scenarios.hpp"

#include <algorithm>
#include <cmath>

#include "flashsim/engine.hpp"

namespace flashsim {

SimConfig with_bandpass(const SimConfig& config) {
  SimConfig c = config;
  c.topology.element = config.bandpass;
  return c;
}

SimConfig with_blocked_path(const SimConfig& config) {
  SimConfig c = config;
  c.topology.segments[1].transmission = SpectralCurve::flat(0.0);
  return c;
}

namespace {

std::uint64_t chunk_count(double duration_s) {
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(duration_s / kChunkSeconds)));
}

}  // namespace

EventTrace histogram_trace(const SimConfig& config, bool filtered) {
  SimConfig c = filtered ? with_bandpass(config) : config;
  c.duration_s = config.duration_s / static_cast<double>(chunk_count(config.duration_s));
  return run_simulation(c, RunOptions{scenario_key::kHistogram << 20, std::nullopt});
}

HistogramReport run_histogram(const SimConfig& config, bool filtered, double min_prominence,
                              std::uint64_t scenario) {
  SimConfig c = filtered ? with_bandpass(config) : config;
  const auto chunks = chunk_count(config.duration_s);
  c.duration_s = config.duration_s / static_cast<double>(chunks);
  const Channel trig = config.scope.trigger_channel;
  std::vector<TimePs> times;
  for (std::uint64_t k = 0; k < chunks; ++k) {
    const auto trace = run_simulation(c, RunOptions{(scenario << 20) | k, std::nullopt});
    const auto recorded = apply_delay(trace[other(trig)], config.scope.electrical_delay);
    const auto got = oscilloscope_capture(trace[trig], recorded, config.scope);
    times.insert(times.end(), got.begin(), got.end());
  }
  HistogramReport r;
  r.histogram = build_histogram(times, config.scope.resolution, config.scope.record_window);
  r.peaks = find_peaks(r.histogram, min_prominence);
  return r;
}

namespace {

void add_rows(CoincidenceReport& report, const CoincidenceTally& t, const std::string& suffix) {
  for (const Channel emitter : {Channel::Apd1, Channel::Apd2}) {
    CoincidenceRow row;
    row.direction = std::string(emitter == Channel::Apd1 ? "1to2" : "2to1") + suffix;
    row.count = t.count_from(emitter);
    row.duration_s = t.duration_s;
    row.rate_hz = t.rate_from(emitter);
    row.rate_err_hz = (row.count > 0 ? std::sqrt(static_cast<double>(row.count)) : kZeroCountUpper) / t.duration_s;
    row.emitter_rate_hz = t.singles_rate(emitter);
    row.probability = t.probability_from(emitter);
    report.rows.push_back(row);
  }
}

}  // namespace

CoincidenceReport run_coincidence(const SimConfig& config, bool filtered) {
  CoincidenceReport report;
  const auto open = tally_coincidences(config, scenario_key::kCoincidence);
  add_rows(report, open, "");
  if (filtered) {
    const auto filt = tally_coincidences(with_bandpass(config), scenario_key::kFiltered);
    add_rows(report, filt, "_filtered");
    for (const Channel emitter : {Channel::Apd1, Channel::Apd2}) {
      report.suppression.push_back({emitter == Channel::Apd1 ? "1to2" : "2to1",
                                    suppression_factor(open.probability_from(emitter),
                                                       filt.probability_from(emitter))});
    }
  }
  const auto blocked = tally_coincidences(with_blocked_path(config), scenario_key::kBlocked);
  add_rows(report, blocked, "_blocked");
  report.accidental_oracle_hz = accidental_rate(blocked.singles_rate(Channel::Apd1),
                                                blocked.singles_rate(Channel::Apd2), config.coincidence.window);
  return report;
}

std::vector<double> scan_wavelengths(const MonochromatorParams& mono, const ScanOptions& options) {
  if (options.samples < 2) throw GratingError("a scan needs at least two samples");
  MonochromatorParams m = mono;
  const double start = grating_angle_for(mono, WavelengthNm{options.start_nm});
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(options.samples));
  for (int k = 0; k < options.samples; ++k) {
    m.angle_deg = start + options.angle_step_deg * k;
    out.push_back(grating_center_wavelength(m).value);
  }
  return out;
}

SpectrumTable run_spectral_scan(const SimConfig& config, const ScanOptions& options) {
  const auto centers = scan_wavelengths(config.monochromator, options);
  const double start = grating_angle_for(config.monochromator, WavelengthNm{options.start_nm});
  std::vector<ScanPoint> points;
  points.reserve(centers.size());
  for (std::size_t k = 0; k < centers.size(); ++k) {
    SimConfig c = config;
    c.duration_s = options.seconds_per_point;
    c.monochromator.angle_deg = start + options.angle_step_deg * static_cast<double>(k);
    c.topology.element = c.monochromator;
    std::optional<std::pair<double, double>> band;
    if (options.band_fwhm > 0.0) {
      const double half = options.band_fwhm * c.monochromator.response_fwhm_nm;
      band = std::make_pair(centers[k] - half, centers[k] + half);
    }
    const auto t = tally_coincidences(c, scenario_key::kScan + k, band);
    points.push_back({centers[k], t.count12, t.count21, t.singles_rate(Channel::Apd1),
                      t.singles_rate(Channel::Apd2), t.duration_s, config.coincidence.window});
  }
  return assemble_spectrum(points);
}

std::vector<double> run_instrument_response(const MonochromatorParams& mono, double laser_nm,
                                            const std::vector<double>& centers_nm, std::uint64_t photons,
                                            std::uint64_t seed) {
  OpticalTopology link;
  for (std::size_t s = 0; s < 3; ++s) {
    link.segments[s] = Segment{kSegmentNames[s], TimePs{0}, SpectralCurve::flat(1.0)};
  }
  for (std::size_t j = 0; j < 4; ++j) link.joints[j] = Joint{kJointNames[j], 0.0};
  std::vector<double> out;
  out.reserve(centers_nm.size());
  for (std::size_t k = 0; k < centers_nm.size(); ++k) {
    MonochromatorParams m = mono;
    m.angle_deg = grating_angle_for(mono, WavelengthNm{centers_nm[k]});
    link.element = m;
    Rng rng(seed, scenario_key::kResponse, static_cast<std::uint32_t>(k), StreamPurpose::Instrument);
    const auto packet = launch_packet(Channel::Apd1, WavelengthNm{laser_nm}, TimePs{0}, 1);
    std::uint64_t passed = 0;
    for (std::uint64_t i = 0; i < photons; ++i) {
      if (propagate_photon(packet, link, rng)) ++passed;
    }
    out.push_back(static_cast<double>(passed) / static_cast<double>(photons));
  }
  return out;
}

}  // namespace flashsim
