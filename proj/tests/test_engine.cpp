#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "flashsim/calibration.hpp"
#include "flashsim/config.hpp"
#include "flashsim/engine.hpp"
#include "support/oracles.hpp"

using namespace flashsim;

namespace {

OpticalTopology lossless_link() {
  OpticalTopology t;
  t.segments = {Segment{"AB", TimePs{15'500}, SpectralCurve::flat(1.0)},
                Segment{"BC", TimePs{1'500}, SpectralCurve::flat(1.0)},
                Segment{"CD", TimePs{15'500}, SpectralCurve::flat(1.0)}};
  t.joints = {Joint{'A', 0.0}, Joint{'B', 0.0}, Joint{'C', 0.0}, Joint{'D', 0.0}};
  return t;
}

ApdParams simple_apd(double qe) {
  ApdParams a;
  a.qe_curve = SpectralCurve::flat(qe);
  a.flash_spectrum = SpectralCurve({{1000, 1.0}, {1600, 1.0}});
  return a;
}

}  // namespace

TEST_CASE("sample_poisson_times") {
  Rng rng(11);
  CHECK(sample_poisson_times(0.0, 600.0, rng).empty());

  const auto times = sample_poisson_times(1e4, 600.0, rng);
  const double n = static_cast<double>(times.size());
  CHECK(std::abs(n - 6e6) < 3 * std::sqrt(6e6));
  CHECK(std::is_sorted(times.begin(), times.end()));

  // Mean gap: 100 us with standard error 100 us / sqrt(n).
  const double mean_gap = static_cast<double>((times.back() - times.front()).value) / (n - 1);
  CHECK(std::abs(mean_gap - 1e8) < 3 * 1e8 / std::sqrt(n));
}

TEST_CASE("sample_wavelength") {
  Rng rng(12);
  const SpectralCurve triangle({{1309.5, 0.0}, {1310, 1.0}, {1310.5, 0.0}});
  for (int i = 0; i < 1000; ++i) {
    const double nm = sample_wavelength(triangle, rng).value;
    REQUIRE(nm >= 1309.5);
    REQUIRE(nm <= 1310.5);
  }

  const SpectralCurve flat({{1000, 1.0}, {1600, 1.0}});
  const WavelengthSampler sampler(flat);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sampler(rng).value;
  CHECK(std::abs(sum / n - 1300.0) < 3 * (600.0 / std::sqrt(12.0)) / std::sqrt(n));

  std::vector<double> xs(10000);
  for (auto& x : xs) x = sampler(rng).value;
  CHECK(oracle::ks_statistic(xs, [](double x) { return std::clamp((x - 1000.0) / 600.0, 0.0, 1.0); }) <
        oracle::kKsCritical01);

  CHECK_THROWS_WITH(sample_wavelength(SpectralCurve({{1000, 0.0}, {1100, 0.0}}), rng), "degenerate spectrum");
  CHECK_THROWS_WITH(sample_wavelength(SpectralCurve::flat(1.0), rng), "degenerate spectrum");
}

TEST_CASE("sampled wavelengths follow any piecewise-linear density") {
  const auto density = default_config().apd1().qe_curve;
  const WavelengthSampler sampler(density);
  Rng rng(13);
  const int n = 100000;
  const int bins = 20;
  const double lo = 950.0;
  const double width = 700.0 / bins;
  std::vector<double> obs(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto b = static_cast<int>((sampler(rng).value - lo) / width);
    obs[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
  }
  const double total = oracle::simpson([&](double x) { return density.eval(x); }, 950, 1650, 14000);
  std::vector<double> expect(bins);
  for (int b = 0; b < bins; ++b) {
    expect[static_cast<std::size_t>(b)] =
        n * oracle::simpson([&](double x) { return density.eval(x); }, lo + b * width, lo + (b + 1) * width, 700) /
        total;
  }
  CHECK(oracle::chi_square_gof(obs, expect) > 0.01);
}

TEST_CASE("propagate_photon paths") {
  auto link = lossless_link();
  Rng rng(14);
  const auto packet = launch_packet(Channel::Apd1, WavelengthNm{1310}, TimePs{1000}, 1);

  auto a = propagate_photon(packet, link, rng);
  REQUIRE(a);
  CHECK(a->apd == Channel::Apd2);
  CHECK(a->time.value == 1000 + 32'500);
  CHECK(a->reflections == 0);

  link.joints[1].reflectance = 1.0;
  a = propagate_photon(packet, link, rng);
  REQUIRE(a);
  CHECK(a->apd == Channel::Apd1);
  CHECK(a->time.value == 1000 + 31'000);

  link = lossless_link();
  link.segments[2].transmission = SpectralCurve::flat(0.0);
  CHECK_FALSE(propagate_photon(packet, link, rng));

  // Two facing mirrors: the fourth reflection ends the packet.
  link = lossless_link();
  link.joints[0].reflectance = 1.0;
  link.joints[1].reflectance = 1.0;
  CHECK_FALSE(propagate_photon(packet, link, rng));

  // A mirror at A returns a packet from D to D after 2 * 32.5 ns.
  link = lossless_link();
  link.joints[0].reflectance = 1.0;
  const auto from_d = launch_packet(Channel::Apd2, WavelengthNm{1310}, TimePs{0}, 1);
  a = propagate_photon(from_d, link, rng);
  REQUIRE(a);
  CHECK(a->apd == Channel::Apd2);
  CHECK(a->time.value == 65'000);
  CHECK(a->reflections == 1);
}

TEST_CASE("propagation probabilities") {
  auto link = lossless_link();
  link.segments[1].transmission = SpectralCurve::flat(0.5);
  link.joints[1].reflectance = 0.2;
  Rng rng(15);
  const auto packet = launch_packet(Channel::Apd1, WavelengthNm{1310}, TimePs{0}, 1);
  std::map<std::int64_t, int> arrivals;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    if (auto a = propagate_photon(packet, link, rng)) ++arrivals[a->time.value];
  }
  // Direct: (1 - 0.2) * 0.5. Reflected at B straight back: 0.2.
  const double p_direct = 0.8 * 0.5;
  const double p_back = 0.2;
  CHECK(std::abs(arrivals[32'500] - n * p_direct) < 4 * std::sqrt(n * p_direct * (1 - p_direct)));
  CHECK(std::abs(arrivals[31'000] - n * p_back) < 4 * std::sqrt(n * p_back * (1 - p_back)));
}

TEST_CASE("detect_photon") {
  ApdParams apd = simple_apd(0.0);
  apd.jitter_sigma = TimePs{0};
  ApdState state(apd);
  ApdStreams streams(1, 0, Channel::Apd1);
  const Arrival arrival{Channel::Apd1, TimePs{100}, WavelengthNm{1310}, 1, 0};
  for (int i = 0; i < 1000; ++i) CHECK_FALSE(detect_photon(state, arrival, streams));

  apd.qe_curve = SpectralCurve::flat(1.0);
  state.fire(TimePs{0});
  CHECK_FALSE(detect_photon(state, arrival, streams));

  ApdParams ten = simple_apd(0.1);
  ten.jitter_sigma = TimePs{0};
  const ApdState fresh(ten);
  const int n = 100000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    if (auto d = detect_photon(fresh, arrival, streams)) {
      ++hits;
      REQUIRE(d->breakdown_time == arrival.time);
    }
  }
  CHECK(std::abs(hits - 0.1 * n) < 3 * std::sqrt(n * 0.1 * 0.9));
}

TEST_CASE("detection jitter is Gaussian with the configured sigma") {
  ApdParams apd = simple_apd(1.0);
  const ApdState state(apd);
  ApdStreams streams(2, 0, Channel::Apd2);
  const Arrival arrival{Channel::Apd2, TimePs{1'000'000}, WavelengthNm{1310}, 1, 0};
  std::vector<double> offsets(20000);
  for (auto& x : offsets) x = static_cast<double>((detect_photon(state, arrival, streams)->breakdown_time -
                                                    arrival.time).value);
  // Whole-picosecond rounding; ties are tiny next to sigma.
  const boost::math::normal ref(0.0, 297.0);
  CHECK(oracle::ks_statistic(offsets, [&](double x) { return boost::math::cdf(ref, x); }) <
        oracle::kKsCritical01);
}

TEST_CASE("process_breakdown") {
  ApdParams apd = simple_apd(0.1);
  const WavelengthSampler sampler(apd.flash_spectrum);
  ApdStreams streams(3, 0, Channel::Apd1);

  ApdState state(apd);
  auto out = process_breakdown(state, Channel::Apd1, TimePs{500}, 1, 0.0, sampler, streams);
  CHECK(out.packets.empty());
  CHECK_FALSE(out.afterpulse);
  CHECK(out.pulse_time.value == 500);
  CHECK(state.armed_from() == TimePs{500} + apd.dead_time);
  CHECK_THROWS_AS(process_breakdown(state, Channel::Apd1, TimePs{600}, 1, 0.0, sampler, streams), std::logic_error);

  const int n = 100000;
  const double mu = 0.7;
  double total = 0.0;
  TimePs t{0};
  for (int i = 0; i < n; ++i) {
    ApdState s(apd);
    out = process_breakdown(s, Channel::Apd1, t, 2, mu, sampler, streams);
    total += static_cast<double>(out.packets.size());
    for (const auto& p : out.packets) {
      REQUIRE(p.emit_time == t);
      REQUIRE(p.generation == 2);
      REQUIRE(p.wavelength.value >= 1000.0);
      REQUIRE(p.wavelength.value <= 1600.0);
    }
  }
  CHECK(std::abs(total / n - mu) < 3 * std::sqrt(mu / n));

  apd.afterpulse_prob = 1.0;
  ApdState ap(apd);
  out = process_breakdown(ap, Channel::Apd1, TimePs{0}, 1, 0.0, sampler, streams);
  REQUIRE(out.afterpulse);
  CHECK(*out.afterpulse >= apd.dead_time);
}

TEST_CASE("thermal rate compensates the dead time") {
  CHECK(thermal_rate(0.0, TimePs{15'000'000}) == 0.0);
  const double r = thermal_rate(9550.0, TimePs{15'000'000});
  CHECK(r / (1.0 + r * 15e-6) == doctest::Approx(9550.0));
  CHECK_THROWS_AS(thermal_rate(1e6, TimePs{15'000'000}), SimError);
}

TEST_CASE("run_simulation basics") {
  auto cfg = default_config();
  cfg.duration_s = 5.0;
  cfg.apd[0].dark_rate = 0.0;
  cfg.apd[1].dark_rate = 0.0;
  const auto empty = run_simulation(cfg);
  CHECK(empty[Channel::Apd1].empty());
  CHECK(empty[Channel::Apd2].empty());

  cfg = default_config();
  cfg.duration_s = 5.0;
  CHECK(run_simulation(cfg) == run_simulation(cfg));
  auto other_seed = cfg;
  other_seed.seed = 2;
  CHECK_FALSE(run_simulation(cfg) == run_simulation(other_seed));
  CHECK_FALSE(run_simulation(cfg, RunOptions{1, std::nullopt}) == run_simulation(cfg, RunOptions{2, std::nullopt}));

  cfg.duration_s = 0.0;
  CHECK_THROWS_AS(run_simulation(cfg), SimError);
}

TEST_CASE("blocked path reproduces the configured dark rates") {
  auto cfg = default_config();
  cfg.duration_s = 100.0;
  cfg.topology.segments[1].transmission = SpectralCurve::flat(0.0);
  const auto trace = run_simulation(cfg);
  for (const Channel c : {Channel::Apd1, Channel::Apd2}) {
    const double expect = cfg.apd[index(c)].dark_rate * cfg.duration_s;
    const double got = static_cast<double>(trace[c].size());
    // A dead-time-filtered Poisson stream is under-dispersed, so sqrt(N) is conservative.
    CHECK(std::abs(got - expect) < 3 * std::sqrt(expect));
  }
}

TEST_CASE("trace invariants: ordering, dead time, generations") {
  auto cfg = default_config();
  cfg.duration_s = 2.0;
  for (auto& a : cfg.apd) {
    a.dead_time = TimePs{40'000};
    a.flash_mean_photons = 4.0;
    a.qe_curve = SpectralCurve::flat(0.6);
    a.afterpulse_prob = 0.1;
  }
  cfg.topology.joints[0].reflectance = 0.1;
  cfg.topology.joints[3].reflectance = 0.1;
  for (int max_gen : {2, 4}) {
    cfg.max_generation = max_gen;
    const auto trace = run_simulation(cfg);
    int highest = 0;
    for (const auto& ch : trace.channels) {
      for (std::size_t i = 0; i < ch.size(); ++i) {
        highest = std::max<int>(highest, ch[i].generation);
        REQUIRE(ch[i].generation <= max_gen);
        REQUIRE(ch[i].time.value >= 0);
        if (i > 0) REQUIRE(ch[i].time - ch[i - 1].time >= TimePs{40'000});
      }
    }
    CHECK(highest == max_gen);
  }
}

TEST_CASE("flash detections follow their source by the path delay") {
  auto cfg = default_config();
  cfg.duration_s = 5.0;
  cfg.topology = lossless_link();
  for (auto& a : cfg.apd) {
    a.jitter_sigma = TimePs{0};
    a.flash_mean_photons = 1.0;
  }
  const auto trace = run_simulation(cfg);
  int checked = 0;
  for (const Channel c : {Channel::Apd1, Channel::Apd2}) {
    const auto& src = trace[other(c)];
    for (const auto& p : trace[c]) {
      if (p.truth != Truth::FlashDetection) continue;
      const TimePs origin = p.time - cfg.topology.one_way_delay();
      REQUIRE(std::binary_search(src.begin(), src.end(), Pulse{origin, Truth::Dark, 0},
                                 [](const Pulse& x, const Pulse& y) { return x.time < y.time; }));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("first-order coincidence probability") {
  // Reflection-free link, no jitter, negligible dead time: p = mu * T * QE.
  auto cfg = default_config();
  cfg.duration_s = 600.0;
  for (auto& a : cfg.apd) {
    a = simple_apd(0.10);
    a.dark_rate = 1e4;
    a.dead_time = TimePs{100'000};
    a.jitter_sigma = TimePs{0};
    a.flash_mean_photons = 0.05;
  }
  cfg.apd[1].dark_rate = 5e3;
  cfg.topology.joints = {Joint{'A', 0.0}, Joint{'B', 0.0}, Joint{'C', 0.0}, Joint{'D', 0.0}};
  const double transmission = 0.97 * 0.946 * 0.97;
  const double armed = 1.0 - 5e3 * 100e-9;
  const double oracle_p = (1.0 - std::exp(-0.05 * transmission * 0.10)) * armed;
  const auto tally = tally_coincidences(cfg, 99);
  const double p = tally.probability_from(Channel::Apd1).p;
  CHECK(p == doctest::Approx(oracle_p).epsilon(0.05));
  CHECK(p == doctest::Approx(0.05 * transmission * 0.10).epsilon(0.05));
}

TEST_CASE("emission band thinning preserves the in-band rate") {
  auto cfg = default_config();
  cfg.duration_s = 120.0;
  cfg.topology.element = MonochromatorParams{};
  for (auto& a : cfg.apd) a.flash_mean_photons = 20.0;
  const double c = grating_center_wavelength(MonochromatorParams{}).value;
  const auto full = tally_coincidences(cfg, 5);
  const auto band = tally_coincidences(cfg, 6, std::make_pair(c - 20.0, c + 20.0));
  const double a = static_cast<double>(full.count12);
  const double b = static_cast<double>(band.count12);
  CHECK(std::abs(a - b) < 4 * std::sqrt(a + b));
}
