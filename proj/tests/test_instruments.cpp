#include <cmath>
#include <vector>

#include "doctest.h"
#include "flashsim/engine.hpp"
#include "flashsim/instruments.hpp"

using namespace flashsim;

namespace {

ChannelTrace trace_at(std::initializer_list<std::int64_t> ps) {
  ChannelTrace t;
  for (auto v : ps) t.push_back(Pulse{TimePs{v}, Truth::Dark, 0});
  return t;
}

ChannelTrace poisson_trace(double rate, double duration_s, std::uint64_t seed) {
  Rng rng(seed);
  ChannelTrace t;
  for (const auto ts : sample_poisson_times(rate, duration_s, rng)) t.push_back(Pulse{ts, Truth::Dark, 0});
  return t;
}

}  // namespace

TEST_CASE("apply_delay") {
  const auto t = trace_at({0, 5, 1000});
  CHECK(apply_delay(t, TimePs{0}) == t);
  const auto d = apply_delay(t, TimePs::from_ns(127));
  CHECK(d[0].time.value == 127'000);
  CHECK(d[2].time.value == 128'000);
  CHECK(apply_delay(d, -TimePs::from_ns(127)) == t);
}

TEST_CASE("oscilloscope_capture") {
  ScopeParams p;
  CHECK(oscilloscope_capture(trace_at({0}), trace_at({95'000}), p) == std::vector<TimePs>{TimePs{95'000}});
  CHECK(oscilloscope_capture(trace_at({0}), trace_at({260'000}), p).empty());
  CHECK(oscilloscope_capture(trace_at({1000}), trace_at({500}), p).empty());

  // Second trigger lands in the processing dead time.
  const auto got = oscilloscope_capture(trace_at({0, 10'000'000}), trace_at({95'000, 10'095'000}), p);
  CHECK(got == std::vector<TimePs>{TimePs{95'000}});

  // Floor quantisation to the resolution.
  const auto q = oscilloscope_capture(trace_at({0}), trace_at({95'099, 95'100, 249'999}), p);
  CHECK(q == std::vector<TimePs>{TimePs{95'000}, TimePs{95'100}, TimePs{249'900}});

  p.processing_dead_time = TimePs{250'000};
  const auto both = oscilloscope_capture(trace_at({0, 1'000'000}), trace_at({95'000, 1'095'000}), p);
  CHECK(both.size() == 2);
}

TEST_CASE("quantisation error stays below one resolution step") {
  ScopeParams p;
  const auto rec = poisson_trace(2e7, 1e-4, 3);
  ChannelTrace trig = trace_at({0});
  const auto got = oscilloscope_capture(trig, rec, p);
  std::size_t j = 0;
  for (const auto& r : rec) {
    if (r.time.value >= p.record_window.value) break;
    const auto diff = r.time.value - got[j++].value;
    REQUIRE(diff >= 0);
    REQUIRE(diff < p.resolution.value);
  }
  CHECK(j == got.size());
}

TEST_CASE("build_histogram") {
  const std::vector<TimePs> none;
  const auto empty = build_histogram(none, TimePs{100}, TimePs{250'000});
  CHECK(empty.size() == 2500);
  CHECK(empty.total() == 0);

  const std::vector<TimePs> one{TimePs{95'000}};
  const auto h = build_histogram(one, TimePs{100}, TimePs{250'000});
  CHECK(h.counts[950] == 1);
  CHECK(h.total() == 1);

  const std::vector<TimePs> spread{TimePs{-150}, TimePs{0}, TimePs{99}, TimePs{300'000}};
  const auto g = build_histogram(spread, TimePs{100}, TimePs{250'000});
  CHECK(g.t0.value == -200);
  CHECK(g.total() == 4);
  CHECK(g.counts[0] == 1);
  CHECK(g.counts[2] == 2);
  CHECK(g.bin_start(g.size() - 1).value == 300'000);
  CHECK_THROWS(build_histogram(spread, TimePs{0}));
}

TEST_CASE("coincidence_count examples") {
  CoincidenceParams p;
  p.electrical_delay = TimePs{0};
  const auto t = trace_at({1000, 2'000'000, 3'000'000});
  CHECK(coincidence_count(t, t, p, 1.0).count == 3);

  const auto shifted = apply_delay(t, p.window);
  CHECK(coincidence_count(t, shifted, p, 1.0).count == 0);
  // Exactly w/2 apart is outside, one picosecond less is inside.
  CHECK(coincidence_count(t, apply_delay(t, TimePs{250}), p, 1.0).count == 0);
  CHECK(coincidence_count(t, apply_delay(t, TimePs{249}), p, 1.0).count == 3);
}

TEST_CASE("coincidence pairing is one-to-one") {
  CoincidenceParams p;
  p.electrical_delay = TimePs{0};
  const auto a = trace_at({1000});
  const auto b = trace_at({900, 1100});
  CHECK(coincidence_count(a, b, p, 1.0).count == 1);
  CHECK(coincidence_count(b, a, p, 1.0).count == 1);
}

TEST_CASE("electrical delay goes to the named channel") {
  CoincidenceParams p;
  p.electrical_delay = TimePs{32'500};
  const auto early = trace_at({0});
  const auto late = trace_at({32'500});
  p.delayed_channel = Channel::Apd1;
  CHECK(coincidence_count(early, late, p, 1.0).count == 1);
  p.delayed_channel = Channel::Apd2;
  CHECK(coincidence_count(early, late, p, 1.0).count == 0);
  CHECK(coincidence_count(late, early, p, 1.0).count == 1);
}

TEST_CASE("coincidence_count is symmetric under channel swap with negated delay") {
  const auto a = poisson_trace(5e6, 1e-3, 4);
  const auto b = poisson_trace(5e6, 1e-3, 5);
  for (std::int64_t d : {0, 1000, -700, 32'500}) {
    CoincidenceParams p;
    p.delayed_channel = Channel::Apd1;
    p.electrical_delay = TimePs{d};
    CoincidenceParams q = p;
    q.delayed_channel = Channel::Apd1;
    q.electrical_delay = TimePs{-d};
    CHECK(coincidence_count(a, b, p, 1.0).count == coincidence_count(b, a, q, 1.0).count);
  }
}

TEST_CASE("accidental coincidences of independent Poisson traces") {
  // One simulated hour in 600 s pieces, r1 * r2 * w oracle.
  const double r1 = 9.55e3;
  const double r2 = 5.46e3;
  const double duration = 3600.0;
  std::uint64_t count = 0;
  for (std::uint64_t k = 0; k < 6; ++k) {
    const auto a = poisson_trace(r1, 600.0, 100 + k);
    const auto b = poisson_trace(r2, 600.0, 200 + k);
    const auto res = coincidence_count(a, b, CoincidenceParams{}, 600.0);
    CHECK(res.rate == doctest::Approx(static_cast<double>(res.count) / 600.0));
    count += res.count;
  }
  const double expect = r1 * r2 * 500e-12 * duration;
  CHECK(expect == doctest::Approx(0.026 * 3600).epsilon(0.01));
  CHECK(std::abs(static_cast<double>(count) - expect) < 3 * std::sqrt(expect));
}
