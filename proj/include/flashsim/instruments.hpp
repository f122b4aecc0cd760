#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flashsim/engine.hpp"
#include "flashsim/model.hpp"

namespace flashsim {

/// Shifts every pulse by `delay`; order is preserved.
ChannelTrace apply_delay(const ChannelTrace& trace, TimePs delay);

/// Triggered capture. A trigger arms the scope unless it falls inside the
/// processing dead time of the last accepted trigger; the pulses on the
/// recorded channel (already delayed) with 0 <= dt < record_window are
/// returned floored to the resolution.
std::vector<TimePs> oscilloscope_capture(const ChannelTrace& trigger, const ChannelTrace& recorded,
                                         const ScopeParams& params);

struct Histogram {
  TimePs bin_width{100};
  TimePs t0{0};
  std::vector<std::uint64_t> counts;

  std::size_t size() const { return counts.size(); }
  TimePs bin_start(std::size_t i) const { return t0 + TimePs{bin_width.value * static_cast<std::int64_t>(i)}; }
  double bin_center_ps(std::size_t i) const {
    return static_cast<double>(bin_start(i).value) + 0.5 * static_cast<double>(bin_width.value);
  }
  std::uint64_t total() const;
  bool operator==(const Histogram&) const = default;
};

/// bin = floor((t - t0) / bin_width). `span` fixes the minimum covered range
/// [t0, t0 + span); the histogram grows to hold every input so the total is
/// conserved. t0 is 0 unless an input is negative.
Histogram build_histogram(std::span<const TimePs> times, TimePs bin_width, TimePs span = TimePs{0});

struct CoincidenceResult {
  std::uint64_t count = 0;
  double rate = 0.0;
};

/// Greedy earliest-first one-to-one pairing of `a` and `b`, after adding
/// params.electrical_delay to the channel params.delayed_channel names
/// (`a` is channel 1, `b` channel 2). Pairs with |ta - tb| < window / 2.
CoincidenceResult coincidence_count(const ChannelTrace& a, const ChannelTrace& b, const CoincidenceParams& params,
                                    double duration_s);

}  // namespace flashsim
