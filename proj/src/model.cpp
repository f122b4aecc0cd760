#include "flashsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flashsim {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

TimePs checked_ps(double ps) {
  if (!std::isfinite(ps) || std::abs(ps) > static_cast<double>(kMaxDuration.value)) {
    throw std::out_of_range("time value out of range");
  }
  return TimePs{static_cast<std::int64_t>(std::llround(ps))};
}

}  // namespace

TimePs TimePs::from_seconds(double s) { return checked_ps(s * 1e12); }
TimePs TimePs::from_ns(double ns) { return checked_ps(ns * 1e3); }

WavelengthNm::WavelengthNm(double nm) : value(nm) {
  if (!(nm > 0.0) || !std::isfinite(nm)) throw std::invalid_argument("wavelength must be positive");
}

SpectralCurve::SpectralCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const auto& k = knots_[i];
    if (!std::isfinite(k.wavelength_nm) || !std::isfinite(k.value)) throw CurveError("non-finite knot");
    if (k.wavelength_nm <= 0.0) throw CurveError("knot wavelength must be positive");
    if (i > 0 && !(k.wavelength_nm > knots_[i - 1].wavelength_nm)) throw CurveError("knots not increasing");
  }
}

SpectralCurve SpectralCurve::flat(double value) {
  if (!std::isfinite(value)) throw CurveError("non-finite knot");
  SpectralCurve c;
  c.flat_ = true;
  c.flat_value_ = value;
  return c;
}

double SpectralCurve::eval(double nm) const {
  if (flat_) return flat_value_;
  if (knots_.empty() || nm < knots_.front().wavelength_nm || nm > knots_.back().wavelength_nm) return 0.0;
  auto hi = std::lower_bound(knots_.begin(), knots_.end(), nm,
                             [](const Knot& k, double x) { return k.wavelength_nm < x; });
  if (hi->wavelength_nm == nm) return hi->value;
  auto lo = hi - 1;
  const double f = (nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  return lo->value + f * (hi->value - lo->value);
}

double SpectralCurve::min_value() const {
  if (flat_) return flat_value_;
  double m = 0.0;
  for (const auto& k : knots_) m = std::min(m, k.value);
  return m;
}

double SpectralCurve::max_value() const {
  if (flat_) return flat_value_;
  double m = 0.0;
  for (const auto& k : knots_) m = std::max(m, k.value);
  return m;
}

double SpectralCurve::integral() const {
  if (flat_) throw CurveError("flat curve has no finite integral");
  double sum = 0.0;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    sum += 0.5 * (knots_[i].value + knots_[i - 1].value) *
           (knots_[i].wavelength_nm - knots_[i - 1].wavelength_nm);
  }
  return sum;
}

SpectralCurve SpectralCurve::clipped(double lo_nm, double hi_nm) const {
  if (flat_) return SpectralCurve({{lo_nm, flat_value_}, {hi_nm, flat_value_}});
  if (knots_.empty()) return {};
  lo_nm = std::max(lo_nm, knots_.front().wavelength_nm);
  hi_nm = std::min(hi_nm, knots_.back().wavelength_nm);
  if (!(hi_nm > lo_nm)) return {};
  std::vector<Knot> out;
  out.push_back({lo_nm, eval(lo_nm)});
  for (const auto& k : knots_) {
    if (k.wavelength_nm > lo_nm && k.wavelength_nm < hi_nm) out.push_back(k);
  }
  out.push_back({hi_nm, eval(hi_nm)});
  return SpectralCurve(std::move(out));
}

double eval_curve(const SpectralCurve& curve, WavelengthNm wl) { return curve(wl); }

TimePs OpticalTopology::one_way_delay() const {
  TimePs total{0};
  for (const auto& s : segments) total += s.delay;
  return total;
}

double OpticalTopology::segment_transmission(std::size_t i, double nm) const {
  double t = segments[i].transmission.eval(nm);
  if (i == 1) t *= element_transmission(element, nm);
  return t;
}

double groove_spacing_nm(const MonochromatorParams& p) { return 1e6 / p.lines_per_mm; }

namespace {

double geometry_factor(const MonochromatorParams& p) {
  return p.geometry == GratingGeometry::Littrow ? 1.0 : std::cos(0.5 * p.deviation_deg * kDeg);
}

}  // namespace

WavelengthNm grating_center_wavelength(const MonochromatorParams& p) {
  const double d = groove_spacing_nm(p);
  const double m = p.diffraction_order;
  const double lambda = 2.0 * d * std::sin(p.angle_deg * kDeg) * geometry_factor(p) / m;
  if (!(lambda > 0.0) || lambda > 2.0 * d / m) throw GratingError("unreachable wavelength");
  return WavelengthNm{lambda};
}

double grating_angle_for(const MonochromatorParams& p, WavelengthNm wl) {
  const double d = groove_spacing_nm(p);
  const double s = wl.value * p.diffraction_order / (2.0 * d * geometry_factor(p));
  if (s > 1.0) throw GratingError("unreachable wavelength");
  return std::asin(s) / kDeg;
}

double monochromator_transmission(const MonochromatorParams& p, WavelengthNm wl) {
  const double center = grating_center_wavelength(p).value;
  const double x = (wl.value - center) / p.response_fwhm_nm;
  return p.peak_transmission * std::exp(-4.0 * std::numbers::ln2 * x * x);
}

double element_transmission(const InsertedElement& element, double nm) {
  if (const auto* bp = std::get_if<Bandpass>(&element)) return bp->transmission.eval(nm);
  if (const auto* mono = std::get_if<MonochromatorParams>(&element)) {
    return monochromator_transmission(*mono, WavelengthNm{nm});
  }
  return 1.0;
}

}  // namespace flashsim
