#include "flashsim/instruments.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace flashsim {

ChannelTrace apply_delay(const ChannelTrace& trace, TimePs delay) {
  ChannelTrace out = trace;
  for (auto& p : out) p.time += delay;
  return out;
}

std::vector<TimePs> oscilloscope_capture(const ChannelTrace& trigger, const ChannelTrace& recorded,
                                         const ScopeParams& params) {
  std::vector<TimePs> out;
  const std::int64_t res = params.resolution.value;
  std::size_t first = 0;
  bool have_trigger = false;
  TimePs busy_until{0};
  for (const auto& trig : trigger) {
    if (have_trigger && trig.time < busy_until) continue;
    have_trigger = true;
    busy_until = trig.time + params.processing_dead_time;
    while (first < recorded.size() && recorded[first].time < trig.time) ++first;
    for (std::size_t j = first; j < recorded.size(); ++j) {
      const std::int64_t dt = (recorded[j].time - trig.time).value;
      if (dt >= params.record_window.value) break;
      out.push_back(TimePs{dt / res * res});
    }
  }
  return out;
}

std::uint64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Histogram build_histogram(std::span<const TimePs> times, TimePs bin_width, TimePs span) {
  if (bin_width.value <= 0) throw std::invalid_argument("bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  const auto lowest = std::min_element(times.begin(), times.end());
  if (lowest != times.end() && lowest->value < 0) {
    h.t0 = TimePs{floor_div(lowest->value, bin_width.value) * bin_width.value};
  }
  std::size_t n = static_cast<std::size_t>((span.value + bin_width.value - 1) / bin_width.value);
  for (const auto t : times) {
    n = std::max(n, static_cast<std::size_t>(floor_div((t - h.t0).value, bin_width.value)) + 1);
  }
  h.counts.assign(n, 0);
  for (const auto t : times) ++h.counts[static_cast<std::size_t>(floor_div((t - h.t0).value, bin_width.value))];
  return h;
}

CoincidenceResult coincidence_count(const ChannelTrace& a, const ChannelTrace& b, const CoincidenceParams& params,
                                    double duration_s) {
  const TimePs delay_a = params.delayed_channel == Channel::Apd1 ? params.electrical_delay : TimePs{0};
  const TimePs delay_b = params.delayed_channel == Channel::Apd2 ? params.electrical_delay : TimePs{0};
  // |dt| < w/2  <=>  2|dt| < w, kept in integers.
  const std::int64_t w = params.window.value;
  CoincidenceResult r;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    const std::int64_t ta = (a[i].time + delay_a).value;
    const std::int64_t tb = (b[j].time + delay_b).value;
    const std::int64_t d = ta - tb;
    if (2 * (d < 0 ? -d : d) < w) {
      ++r.count;
      ++i;
      ++j;
    } else if (ta < tb) {
      ++i;
    } else {
      ++j;
    }
  }
  r.rate = duration_s > 0.0 ? static_cast<double>(r.count) / duration_s : 0.0;
  return r;
}

}  // namespace flashsim
