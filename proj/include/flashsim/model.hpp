#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace flashsim {

/// Signed picosecond count. All simulation timestamps use this unit.
struct TimePs {
  std::int64_t value = 0;

  constexpr TimePs() = default;
  constexpr explicit TimePs(std::int64_t ps) : value(ps) {}

  static TimePs from_seconds(double s);
  static TimePs from_ns(double ns);
  double seconds() const { return static_cast<double>(value) * 1e-12; }
  double ns() const { return static_cast<double>(value) * 1e-3; }

  constexpr auto operator<=>(const TimePs&) const = default;
  constexpr TimePs operator+(TimePs o) const { return TimePs{value + o.value}; }
  constexpr TimePs operator-(TimePs o) const { return TimePs{value - o.value}; }
  constexpr TimePs operator-() const { return TimePs{-value}; }
  constexpr TimePs& operator+=(TimePs o) {
    value += o.value;
    return *this;
  }
};

/// Longest duration the simulator accepts (10^5 s); keeps every sum of
/// timestamps and path delays far from int64 overflow.
inline constexpr TimePs kMaxDuration{100'000'000'000'000'000};

struct WavelengthNm {
  double value = 0.0;

  constexpr WavelengthNm() = default;
  explicit WavelengthNm(double nm);
  constexpr auto operator<=>(const WavelengthNm&) const = default;
};

struct Knot {
  double wavelength_nm;
  double value;
  bool operator==(const Knot&) const = default;
};

class CurveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Piecewise-linear function of wavelength.
///
/// A knotted curve is zero outside [front, back] of its knots. A flat curve
/// (built with SpectralCurve::flat) has the same value at every wavelength and
/// is used for achromatic elements such as fibre losses.
class SpectralCurve {
 public:
  SpectralCurve() = default;
  explicit SpectralCurve(std::vector<Knot> knots);
  static SpectralCurve flat(double value);

  double operator()(WavelengthNm wl) const { return eval(wl.value); }
  double eval(double nm) const;

  bool is_flat() const { return flat_; }
  double flat_value() const { return flat_value_; }
  const std::vector<Knot>& knots() const { return knots_; }
  bool empty() const { return !flat_ && knots_.empty(); }

  double min_value() const;
  double max_value() const;
  /// Integral over the knot support; flat curves are not integrable.
  double integral() const;
  /// Restriction to [lo, hi] with knots inserted at the cut points.
  SpectralCurve clipped(double lo_nm, double hi_nm) const;

  bool operator==(const SpectralCurve&) const = default;

 private:
  std::vector<Knot> knots_;
  bool flat_ = false;
  double flat_value_ = 0.0;
};

double eval_curve(const SpectralCurve& curve, WavelengthNm wl);

struct ApdParams {
  /// Observed free-running dark count rate (dead-time losses included).
  double dark_rate = 0.0;
  SpectralCurve qe_curve;
  TimePs dead_time{15'000'000};
  double afterpulse_prob = 0.0;
  TimePs afterpulse_mean_delay{1'000'000};
  double flash_mean_photons = 0.0;
  SpectralCurve flash_spectrum;
  TimePs jitter_sigma{297};

  bool operator==(const ApdParams&) const = default;
};

inline constexpr std::array<char, 4> kJointNames{'A', 'B', 'C', 'D'};
inline constexpr std::array<const char*, 3> kSegmentNames{"AB", "BC", "CD"};

struct Segment {
  std::string name;
  TimePs delay;
  SpectralCurve transmission;
  bool operator==(const Segment&) const = default;
};

struct Joint {
  char position = 'A';
  double reflectance = 0.0;
  bool operator==(const Joint&) const = default;
};

enum class GratingGeometry { Littrow, FixedDeviation };

struct MonochromatorParams {
  double lines_per_mm = 600.0;
  int diffraction_order = 1;
  GratingGeometry geometry = GratingGeometry::Littrow;
  double deviation_deg = 0.0;
  double response_fwhm_nm = 3.3;
  double peak_transmission = 0.51;
  double angle_deg = 23.14;

  bool operator==(const MonochromatorParams&) const = default;
};

struct Bandpass {
  SpectralCurve transmission;
  bool operator==(const Bandpass&) const = default;
};

using InsertedElement = std::variant<std::monostate, Bandpass, MonochromatorParams>;

/// Fibre link A-B-C-D between the two detectors. APD1 sits at A, APD2 at D;
/// the optional element is inserted in the B-C free-space section.
struct OpticalTopology {
  std::array<Segment, 3> segments;
  std::array<Joint, 4> joints;
  InsertedElement element;

  TimePs one_way_delay() const;
  /// Wavelength-resolved transmission of one segment, including the inserted
  /// element for the B-C segment.
  double segment_transmission(std::size_t index, double nm) const;
  double reflectance(std::size_t joint) const { return joints[joint].reflectance; }

  bool operator==(const OpticalTopology&) const = default;
};

enum class Channel : std::uint8_t { Apd1 = 0, Apd2 = 1 };

inline constexpr std::size_t index(Channel c) { return static_cast<std::size_t>(c); }
inline constexpr Channel other(Channel c) { return c == Channel::Apd1 ? Channel::Apd2 : Channel::Apd1; }

struct ScopeParams {
  TimePs record_window{250'000};
  TimePs resolution{100};
  TimePs processing_dead_time{1'000'000'000};
  Channel trigger_channel = Channel::Apd2;
  /// Delay on the recorded channel so every interesting event lands at t > 0.
  TimePs electrical_delay{127'000};

  bool operator==(const ScopeParams&) const = default;
};

struct CoincidenceParams {
  TimePs window{500};
  /// Matched to the one-way optical delay so that an emitter's own pulse
  /// lines up with the flash detection on the other channel.
  TimePs electrical_delay{32'500};
  Channel delayed_channel = Channel::Apd1;

  bool operator==(const CoincidenceParams&) const = default;
};

struct SimConfig {
  std::array<ApdParams, 2> apd;
  OpticalTopology topology;
  Bandpass bandpass;
  MonochromatorParams monochromator;
  double duration_s = 600.0;
  std::uint64_t seed = 1;
  int max_generation = 4;
  ScopeParams scope;
  CoincidenceParams coincidence;

  const ApdParams& apd1() const { return apd[0]; }
  const ApdParams& apd2() const { return apd[1]; }
  bool operator==(const SimConfig&) const = default;
};

class GratingError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Groove spacing in nanometres.
double groove_spacing_nm(const MonochromatorParams& params);

/// Centre wavelength selected at params.angle_deg. Littrow uses
/// lambda = 2 d sin(theta) / m; fixed deviation D splits the incidence and
/// diffraction angles as theta +- D/2 in d (sin a + sin b) = m lambda.
WavelengthNm grating_center_wavelength(const MonochromatorParams& params);

/// Grating angle that selects the given wavelength (inverse of the above).
double grating_angle_for(const MonochromatorParams& params, WavelengthNm wl);

/// Peak transmission times a Gaussian response around the centre wavelength.
double monochromator_transmission(const MonochromatorParams& params, WavelengthNm wl);

double element_transmission(const InsertedElement& element, double nm);

}  // namespace flashsim
