#include <cmath>
#include <string>

#include "doctest.h"
#include "flashsim/calibration.hpp"
#include "flashsim/config.hpp"
#include "flashsim/scenarios.hpp"
#include "support/oracles.hpp"

using namespace flashsim;

namespace {

SimConfig short_run(double seconds) {
  auto c = default_config();
  c.duration_s = seconds;
  return c;
}

// Reflection-free link with flat 10% QE and no jitter, so the first-order
// probability is mu * T * QE.
SimConfig flat_qe_config() {
  auto c = default_config();
  for (auto& a : c.apd) {
    a.qe_curve = SpectralCurve::flat(0.10);
    a.flash_spectrum = SpectralCurve({{1000, 1.0}, {1600, 1.0}});
    a.dead_time = TimePs{100'000};
    a.jitter_sigma = TimePs{0};
  }
  c.topology.joints = {Joint{'A', 0.0}, Joint{'B', 0.0}, Joint{'C', 0.0}, Joint{'D', 0.0}};
  return c;
}

}  // namespace

TEST_CASE("calibrate_flash_mu trivial and error cases") {
  CHECK(calibrate_flash_mu(0.0, default_config()) == 0.0);
  CHECK_THROWS_AS(calibrate_flash_mu(1.5, default_config()), CalibrationError);

  auto dead = default_config();
  for (auto& a : dead.apd) a.qe_curve = SpectralCurve::flat(0.0);
  CHECK_THROWS_WITH_AS(calibrate_flash_mu(0.001, dead), doctest::Contains("unreachable"), CalibrationError);
}

TEST_CASE("calibrate_flash_mu matches the first-order oracle") {
  const auto cfg = flat_qe_config();
  CalibrationOptions opts;
  opts.run_duration_s = 300.0;
  opts.rel_tolerance = 5e-3;
  const double mu = calibrate_flash_mu(0.0044, cfg, opts);
  const double transmission = 0.97 * 0.946 * 0.97;
  CHECK(mu == doctest::Approx(0.0044 / (transmission * 0.10)).epsilon(0.10));

  auto check = cfg;
  check.apd[0].flash_mean_photons = mu;
  check.duration_s = 600.0;
  const double p = tally_coincidences(check, 4242).probability_from(Channel::Apd1).p;
  CHECK(p == doctest::Approx(0.0044).epsilon(0.05));
}

TEST_CASE("chunked tallies cover the full duration") {
  auto cfg = short_run(1300.0);
  cfg.apd[0].dark_rate = 100.0;
  cfg.apd[1].dark_rate = 100.0;
  const auto t = tally_coincidences(cfg, 1);
  CHECK(t.duration_s == doctest::Approx(1300.0));
  CHECK(std::abs(static_cast<double>(t.singles1) - 130000.0) < 4 * std::sqrt(130000.0));
}

TEST_CASE("histogram scenario geometry") {
  const auto r = run_histogram(short_run(120.0), false);
  REQUIRE(r.peaks.size() >= 2);
  CHECK(r.peaks[0].center_ps == doctest::Approx(94'500).epsilon(0.002));
  CHECK(r.peaks[1].center_ps == doctest::Approx(159'500).epsilon(0.002));
  CHECK(r.histogram.size() == 2500);
}

TEST_CASE("histogram with no dark counts is empty") {
  auto cfg = short_run(10.0);
  cfg.apd[0].dark_rate = 0.0;
  cfg.apd[1].dark_rate = 0.0;
  const auto r = run_histogram(cfg, false);
  CHECK(r.histogram.total() == 0);
  CHECK(r.peaks.empty());
}

TEST_CASE("coincidence report rows") {
  const auto r = run_coincidence(short_run(60.0), true);
  REQUIRE(r.rows.size() == 6);
  CHECK(r.rows[0].direction == "1to2");
  CHECK(r.rows[1].direction == "2to1");
  CHECK(r.rows[2].direction == "1to2_filtered");
  CHECK(r.rows[4].direction == "1to2_blocked");
  REQUIRE(r.suppression.size() == 2);
  CHECK(r.suppression[0].suppression.factor > 10.0);
  CHECK(r.accidental_oracle_hz == doctest::Approx(0.026).epsilon(0.05));
}

TEST_CASE("no transmission and no window means no coincidences") {
  auto cfg = short_run(30.0);
  for (auto& s : cfg.topology.segments) s.transmission = SpectralCurve::flat(0.0);
  cfg.coincidence.window = TimePs{0};
  const auto r = run_coincidence(cfg, false);
  for (const auto& row : r.rows) CHECK(row.count == 0);
}

TEST_CASE("scan wavelengths follow the grating") {
  ScanOptions opts;
  const auto nm = scan_wavelengths(MonochromatorParams{}, opts);
  REQUIRE(nm.size() == 84);
  CHECK(nm.front() == doctest::Approx(1000.0));
  for (std::size_t i = 1; i < nm.size(); ++i) CHECK(nm[i] > nm[i - 1]);
  opts.samples = 1;
  CHECK_THROWS(scan_wavelengths(MonochromatorParams{}, opts));
}

TEST_CASE("two-sample spectral scan") {
  auto cfg = default_config();
  ScanOptions opts;
  opts.samples = 2;
  opts.seconds_per_point = 5.0;
  const auto t = run_spectral_scan(cfg, opts);
  REQUIRE(t.size() == 2);
  CHECK(t[0].lambda_nm < t[1].lambda_nm);
}

TEST_CASE("opaque monochromator leaves only accidentals") {
  auto cfg = default_config();
  cfg.monochromator.peak_transmission = 0.0;
  for (auto& a : cfg.apd) a.flash_mean_photons = 50.0;
  ScanOptions opts;
  opts.samples = 6;
  opts.start_nm = 1250.0;
  opts.seconds_per_point = 100.0;
  double observed = 0.0;
  double expected = 0.0;
  for (const auto& r : run_spectral_scan(cfg, opts)) {
    observed += (r.rate12 + r.rate21) * opts.seconds_per_point;
    expected += 2 * r.baseline * opts.seconds_per_point;
  }
  CHECK(std::abs(observed - expected) < 3 * std::sqrt(expected));
}

TEST_CASE("measured rates are true flash coincidences plus accidentals") {
  auto cfg = default_config();
  cfg.duration_s = 120.0;
  cfg.topology.element = cfg.monochromator;
  for (auto& a : cfg.apd) a.flash_mean_photons = 60.0;
  const double c = grating_center_wavelength(cfg.monochromator).value;
  const auto trace = run_simulation(cfg, RunOptions{7, std::make_pair(c - 20.0, c + 20.0)});

  ChannelTrace flashes;
  for (const auto& p : trace[Channel::Apd2]) {
    if (p.truth == Truth::FlashDetection && p.generation == 1) flashes.push_back(p);
  }
  const auto all = coincidence_count(trace[Channel::Apd1], trace[Channel::Apd2], cfg.coincidence, cfg.duration_s);
  const auto truth = coincidence_count(trace[Channel::Apd1], flashes, cfg.coincidence, cfg.duration_s);
  const double acc = accidental_rate(trace.singles_rate(Channel::Apd1), trace.singles_rate(Channel::Apd2),
                                     cfg.coincidence.window) *
                     cfg.duration_s;
  const double excess = static_cast<double>(all.count - truth.count);
  CHECK(truth.count > 1000);
  CHECK(std::abs(excess - acc) < 3 * std::sqrt(acc) + 1.0);
}

TEST_CASE("instrument response of a monochromatic line") {
  std::vector<double> centers;
  for (double nm = 1300; nm <= 1320.0001; nm += 0.5) centers.push_back(nm);
  const auto y = run_instrument_response(MonochromatorParams{}, 1310.0, centers, 20000, 1);
  REQUIRE(y.size() == centers.size());
  const auto s = response_shape(centers, y);
  CHECK(s.peak == doctest::Approx(0.51).epsilon(0.04));
  CHECK(s.fwhm == doctest::Approx(3.3).epsilon(0.06));
  CHECK(s.center == doctest::Approx(1310.0).epsilon(1e-3));
}
