#include "flashsim/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace flashsim {

const char* truth_label(Truth t) {
  switch (t) {
    case Truth::Dark:
      return "dark";
    case Truth::FlashDetection:
      return "flash";
    case Truth::Afterpulse:
      return "afterpulse";
  }
  return "unknown";
}

WavelengthSampler::WavelengthSampler(const SpectralCurve& density) {
  if (density.is_flat()) throw std::domain_error("degenerate spectrum");
  knots_ = density.knots();
  cumulative_.reserve(knots_.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (knots_[i].value < 0.0) throw std::domain_error("negative spectral density");
    if (i > 0) {
      sum += 0.5 * (knots_[i].value + knots_[i - 1].value) * (knots_[i].wavelength_nm - knots_[i - 1].wavelength_nm);
    }
    cumulative_.push_back(sum);
  }
}

WavelengthNm WavelengthSampler::operator()(Rng& rng) const {
  if (!(total() > 0.0)) throw std::domain_error("degenerate spectrum");
  const double target = rng.uniform() * total();
  // First knot whose cumulative area exceeds the target closes the segment.
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  const auto hi = static_cast<std::size_t>(it - cumulative_.begin());
  const auto& a = knots_[hi - 1];
  const auto& b = knots_[hi];
  const double width = b.wavelength_nm - a.wavelength_nm;
  const double r = target - cumulative_[hi - 1];
  const double slope = (b.value - a.value) / width;
  // Root of a.value * x + slope * x^2 / 2 = r in the cancellation-free form.
  const double disc = std::max(0.0, a.value * a.value + 2.0 * slope * r);
  const double denom = a.value + std::sqrt(disc);
  double x = denom > 0.0 ? 2.0 * r / denom : 0.0;
  x = std::clamp(x, 0.0, width);
  return WavelengthNm{std::max(a.wavelength_nm + x, a.wavelength_nm)};
}

WavelengthNm sample_wavelength(const SpectralCurve& curve, Rng& rng) { return WavelengthSampler(curve)(rng); }

std::vector<TimePs> sample_poisson_times(double rate, double duration_s, Rng& rng) {
  std::vector<TimePs> times;
  if (!(rate > 0.0)) return times;
  const double mean_gap_ps = 1e12 / rate;
  const TimePs end = TimePs::from_seconds(duration_s);
  double t = 0.0;
  while (true) {
    t += rng.exponential(mean_gap_ps);
    const TimePs ts{static_cast<std::int64_t>(t)};
    if (ts >= end) break;
    times.push_back(ts);
  }
  return times;
}

PhotonPacket launch_packet(Channel from, WavelengthNm wl, TimePs t, int generation) {
  return from == Channel::Apd1 ? PhotonPacket{wl, 0, +1, t, generation} : PhotonPacket{wl, 3, -1, t, generation};
}

std::optional<Arrival> propagate_photon(const PhotonPacket& packet, const OpticalTopology& topology, Rng& rng) {
  const double nm = packet.wavelength.value;
  std::size_t pos = packet.position;
  int dir = packet.direction;
  TimePs t = packet.emit_time;
  int reflections = 0;
  while (true) {
    if ((dir > 0 && pos >= 3) || (dir < 0 && pos == 0)) return std::nullopt;
    const std::size_t seg = dir > 0 ? pos : pos - 1;
    const double tr = topology.segment_transmission(seg, nm);
    if (tr <= 0.0) return std::nullopt;
    if (tr < 1.0 && !(rng.uniform() < tr)) return std::nullopt;
    t += topology.segments[seg].delay;
    pos = dir > 0 ? pos + 1 : pos - 1;

    const double r = topology.reflectance(pos);
    if (r > 0.0 && rng.uniform() < r) {
      if (reflections == kMaxReflections) return std::nullopt;
      ++reflections;
      dir = -dir;
      continue;
    }
    if (pos == 0 || pos == 3) {
      return Arrival{pos == 0 ? Channel::Apd1 : Channel::Apd2, t, packet.wavelength, packet.generation, reflections};
    }
  }
}

ApdStreams::ApdStreams(std::uint64_t seed, std::uint64_t scenario, Channel c)
    : flash_count(seed, scenario, static_cast<std::uint32_t>(index(c)), StreamPurpose::FlashCount),
      flash_wavelength(seed, scenario, static_cast<std::uint32_t>(index(c)), StreamPurpose::FlashWavelength),
      detection(seed, scenario, static_cast<std::uint32_t>(index(c)), StreamPurpose::Detection),
      jitter(seed, scenario, static_cast<std::uint32_t>(index(c)), StreamPurpose::Jitter),
      afterpulse(seed, scenario, static_cast<std::uint32_t>(index(c)), StreamPurpose::Afterpulse) {}

BreakdownOutcome process_breakdown(ApdState& state, Channel apd, TimePs t, int packet_generation,
                                   double mean_photons, const WavelengthSampler& spectrum, ApdStreams& rng) {
  if (!state.armed(t)) throw std::logic_error("process_breakdown called on a dead detector");
  BreakdownOutcome out;
  out.pulse_time = t;
  const auto n = rng.flash_count.poisson(mean_photons);
  out.packets.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    out.packets.push_back(launch_packet(apd, spectrum(rng.flash_wavelength), t, packet_generation));
  }
  const auto& p = state.params();
  if (p.afterpulse_prob > 0.0 && rng.afterpulse.bernoulli(p.afterpulse_prob)) {
    const double delay = rng.afterpulse.exponential(static_cast<double>(p.afterpulse_mean_delay.value));
    out.afterpulse = t + p.dead_time + TimePs{static_cast<std::int64_t>(std::llround(delay))};
  }
  state.fire(t);
  return out;
}

std::optional<Detection> detect_photon(const ApdState& state, const Arrival& arrival, ApdStreams& rng) {
  if (!state.armed(arrival.time)) return std::nullopt;
  if (!(rng.detection.uniform() < state.params().qe_curve.eval(arrival.wavelength.value))) return std::nullopt;
  const double sigma = static_cast<double>(state.params().jitter_sigma.value);
  const auto jitter = static_cast<std::int64_t>(std::llround(rng.jitter.normal(0.0, sigma)));
  return Detection{arrival.time + TimePs{jitter}};
}

double thermal_rate(double observed, TimePs dead_time) {
  const double dead = dead_time.seconds();
  if (observed * dead >= 1.0) throw SimError("dark rate times dead time must be below 1");
  return observed / (1.0 - observed * dead);
}

namespace {

enum class EventKind : std::uint8_t { Dark, Afterpulse, Photon };

struct SimEvent {
  TimePs time;
  std::uint64_t seq;
  EventKind kind;
  Channel apd;
  std::uint8_t generation;
  double wavelength_nm;
};

struct Later {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

class Simulation {
 public:
  Simulation(const SimConfig& config, const RunOptions& options)
      : config_(config),
        end_(TimePs::from_seconds(config.duration_s)),
        states_{ApdState(config.apd[0]), ApdState(config.apd[1])},
        streams_{ApdStreams(config.seed, options.scenario, Channel::Apd1),
                 ApdStreams(config.seed, options.scenario, Channel::Apd2)},
        dark_{Rng(config.seed, options.scenario, 0, StreamPurpose::DarkCounts),
              Rng(config.seed, options.scenario, 1, StreamPurpose::DarkCounts)},
        propagation_{Rng(config.seed, options.scenario, 0, StreamPurpose::Propagation),
                     Rng(config.seed, options.scenario, 1, StreamPurpose::Propagation)} {
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& a = config.apd[c];
      SpectralCurve spectrum = a.flash_spectrum;
      mean_photons_[c] = a.flash_mean_photons;
      if (options.emission_band && mean_photons_[c] > 0.0) {
        const double full = spectrum.integral();
        spectrum = spectrum.clipped(options.emission_band->first, options.emission_band->second);
        const double part = spectrum.empty() ? 0.0 : spectrum.integral();
        mean_photons_[c] = full > 0.0 ? mean_photons_[c] * part / full : 0.0;
      }
      if (mean_photons_[c] > 0.0) samplers_[c].emplace(spectrum);
      dark_gap_ps_[c] = a.dark_rate > 0.0 ? 1e12 / thermal_rate(a.dark_rate, a.dead_time) : 0.0;
    }
  }

  EventTrace run() {
    EventTrace trace;
    trace.duration_s = config_.duration_s;
    for (std::size_t c = 0; c < 2; ++c) {
      next_dark_[c] = 0.0;
      schedule_dark(static_cast<Channel>(c));
    }
    while (!queue_.empty()) {
      const SimEvent ev = queue_.top();
      queue_.pop();
      now_ = ev.time;
      auto& state = states_[index(ev.apd)];
      switch (ev.kind) {
        case EventKind::Dark:
          schedule_dark(ev.apd);
          if (state.armed(ev.time)) fire(trace, ev.apd, ev.time, Truth::Dark, 0);
          break;
        case EventKind::Afterpulse:
          if (state.armed(ev.time)) fire(trace, ev.apd, ev.time, Truth::Afterpulse, 0);
          break;
        case EventKind::Photon: {
          const Arrival arrival{ev.apd, ev.time, WavelengthNm{ev.wavelength_nm}, ev.generation, 0};
          if (auto det = detect_photon(state, arrival, streams_[index(ev.apd)])) {
            // Negative jitter cannot pull the avalanche into the dead time that
            // was already checked at the arrival.
            const TimePs t = std::max({det->breakdown_time, TimePs{0}, state.armed_from()});
            if (t < end_) fire(trace, ev.apd, t, Truth::FlashDetection, ev.generation);
          }
          break;
        }
      }
    }
    for (auto& ch : trace.channels) {
      std::stable_sort(ch.begin(), ch.end(), [](const Pulse& a, const Pulse& b) { return a.time < b.time; });
    }
    return trace;
  }

 private:
  void push(TimePs t, EventKind kind, Channel apd, int generation = 0, double nm = 0.0) {
    if (t >= end_) return;
    queue_.push(SimEvent{std::max(t, now_), seq_++, kind, apd, static_cast<std::uint8_t>(generation), nm});
  }

  void schedule_dark(Channel c) {
    const auto i = index(c);
    if (dark_gap_ps_[i] <= 0.0) return;
    next_dark_[i] += dark_[i].exponential(dark_gap_ps_[i]);
    if (next_dark_[i] >= static_cast<double>(end_.value)) return;
    push(TimePs{static_cast<std::int64_t>(next_dark_[i])}, EventKind::Dark, c);
  }

  void fire(EventTrace& trace, Channel c, TimePs t, Truth truth, int generation) {
    const auto i = index(c);
    auto& state = states_[i];
    trace.channels[i].push_back(Pulse{t, truth, static_cast<std::uint8_t>(generation)});

    const int packet_generation = truth == Truth::FlashDetection ? generation + 1 : 1;
    const bool emits = packet_generation <= config_.max_generation && samplers_[i].has_value();
    static const WavelengthSampler kNoSpectrum(SpectralCurve({{1.0, 0.0}, {2.0, 0.0}}));
    const auto outcome = process_breakdown(state, c, t, packet_generation, emits ? mean_photons_[i] : 0.0,
                                           emits ? *samplers_[i] : kNoSpectrum, streams_[i]);
    for (const auto& packet : outcome.packets) {
      if (auto arrival = propagate_photon(packet, config_.topology, propagation_[i])) {
        push(arrival->time, EventKind::Photon, arrival->apd, arrival->generation, arrival->wavelength.value);
      }
    }
    if (outcome.afterpulse) push(*outcome.afterpulse, EventKind::Afterpulse, c);
  }

  const SimConfig& config_;
  TimePs end_;
  TimePs now_{0};
  std::uint64_t seq_ = 0;
  std::array<ApdState, 2> states_;
  std::array<ApdStreams, 2> streams_;
  std::array<Rng, 2> dark_;
  std::array<Rng, 2> propagation_;
  std::array<std::optional<WavelengthSampler>, 2> samplers_;
  std::array<double, 2> mean_photons_{};
  std::array<double, 2> dark_gap_ps_{};
  std::array<double, 2> next_dark_{};
  std::priority_queue<SimEvent, std::vector<SimEvent>, Later> queue_;
};

}  // namespace

EventTrace run_simulation(const SimConfig& config, const RunOptions& options) {
  if (!(config.duration_s > 0.0)) throw SimError("duration must be positive");
  if (config.duration_s > kMaxDuration.seconds()) throw SimError("duration exceeds 1e5 s");
  return Simulation(config, options).run();
}

}  // namespace flashsim
