#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flashsim/model.hpp"
#include "flashsim/random.hpp"

namespace flashsim {

enum class Truth : std::uint8_t { Dark, FlashDetection, Afterpulse };

const char* truth_label(Truth t);

/// One electrical output pulse. `generation` is the cascade depth of the
/// flash photon that caused a FlashDetection and 0 otherwise.
struct Pulse {
  TimePs time;
  Truth truth = Truth::Dark;
  std::uint8_t generation = 0;

  bool operator==(const Pulse&) const = default;
};

using ChannelTrace = std::vector<Pulse>;

struct EventTrace {
  std::array<ChannelTrace, 2> channels;
  double duration_s = 0.0;

  const ChannelTrace& operator[](Channel c) const { return channels[index(c)]; }
  double singles_rate(Channel c) const { return static_cast<double>(channels[index(c)].size()) / duration_s; }
  bool operator==(const EventTrace&) const = default;
};

/// Draws wavelengths from a non-negative piecewise-linear density.
class WavelengthSampler {
 public:
  explicit WavelengthSampler(const SpectralCurve& density);

  WavelengthNm operator()(Rng& rng) const;
  double total() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

 private:
  std::vector<Knot> knots_;
  std::vector<double> cumulative_;
};

/// Throws std::domain_error("degenerate spectrum") for zero-integral curves.
WavelengthNm sample_wavelength(const SpectralCurve& curve, Rng& rng);

/// Homogeneous Poisson arrival times on [0, duration) via exponential gaps.
std::vector<TimePs> sample_poisson_times(double rate, double duration_s, Rng& rng);

inline constexpr int kMaxReflections = 3;

struct PhotonPacket {
  WavelengthNm wavelength;
  /// Joint index 0..3 (A..D) the packet starts from.
  std::size_t position = 0;
  /// +1 travels toward D, -1 toward A.
  int direction = +1;
  TimePs emit_time;
  int generation = 1;
};

struct Arrival {
  Channel apd;
  TimePs time;
  WavelengthNm wavelength;
  int generation = 1;
  int reflections = 0;
};

/// Packet launched into the fibre by the detector on `from`.
PhotonPacket launch_packet(Channel from, WavelengthNm wl, TimePs t, int generation);

/// Walks the A-B-C-D chain. Each segment is survived with its spectral
/// transmission, each joint reflects with its reflectance. A fourth
/// reflection terminates the packet.
std::optional<Arrival> propagate_photon(const PhotonPacket& packet, const OpticalTopology& topology, Rng& rng);

/// Per-detector random streams.
struct ApdStreams {
  ApdStreams(std::uint64_t seed, std::uint64_t scenario, Channel c);

  Rng flash_count;
  Rng flash_wavelength;
  Rng detection;
  Rng jitter;
  Rng afterpulse;
};

class ApdState {
 public:
  explicit ApdState(const ApdParams& params) : params_(&params) {}

  bool armed(TimePs t) const { return t >= armed_from_; }
  TimePs armed_from() const { return armed_from_; }
  const ApdParams& params() const { return *params_; }
  void fire(TimePs t) { armed_from_ = t + params_->dead_time; }

 private:
  const ApdParams* params_;
  TimePs armed_from_{0};
};

struct BreakdownOutcome {
  TimePs pulse_time;
  std::vector<PhotonPacket> packets;
  std::optional<TimePs> afterpulse;
};

/// Fires the detector at `t`: output pulse at `t`, Poisson(mean_photons)
/// flash packets launched at `t`, and possibly one afterpulse after the dead
/// time. Timing jitter is applied at photon detection, not here. Calling it
/// on a dead detector is a programming error.
BreakdownOutcome process_breakdown(ApdState& state, Channel apd, TimePs t, int packet_generation,
                                   double mean_photons, const WavelengthSampler& spectrum, ApdStreams& rng);

struct Detection {
  /// Avalanche time: arrival plus Gaussian jitter.
  TimePs breakdown_time;
};

/// Detects with probability QE(lambda) when armed; dead detectors never fire.
std::optional<Detection> detect_photon(const ApdState& state, const Arrival& arrival, ApdStreams& rng);

struct RunOptions {
  /// Scenario index folded into every stream key; independent replicas and
  /// scan points use distinct values.
  std::uint64_t scenario = 0;
  /// Emit flash photons only inside [first, second] nm, with the mean photon
  /// number scaled by the enclosed fraction of the spectrum. Exact Poisson
  /// thinning for everything that crosses an element that is opaque outside
  /// the band; photons that never leave the emitter's side of the element
  /// return within its dead time.
  std::optional<std::pair<double, double>> emission_band;
};

class SimError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Discrete-event run over [0, duration). Identical (config, options) give
/// bit-identical traces.
EventTrace run_simulation(const SimConfig& config, const RunOptions& options = {});

/// Breakdown attempt rate that yields `observed` counts/s behind a
/// non-paralysable dead time.
double thermal_rate(double observed, TimePs dead_time);

}  // namespace flashsim
