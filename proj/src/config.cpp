#include "flashsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace flashsim {

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) + key + ": " +
                         message),
      key_(std::move(key)),
      line_(line),
      message_(message) {}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a number, got '" + std::string(s) + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view s) {
  s = trim(s);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

Channel parse_channel(std::string_view s) {
  const int c = parse_int<int>(s);
  if (c == 1) return Channel::Apd1;
  if (c == 2) return Channel::Apd2;
  throw std::invalid_argument("channel must be 1 or 2");
}

std::string format_channel(Channel c) { return c == Channel::Apd1 ? "1" : "2"; }

/// Time field stored in picoseconds, written in `unit_ps` units.
struct TimeUnit {
  double ps_per_unit;
};

std::string format_time(TimePs t, TimeUnit u) { return format_number(static_cast<double>(t.value) / u.ps_per_unit); }

TimePs parse_time(std::string_view s, TimeUnit u) {
  const double v = parse_double(s) * u.ps_per_unit;
  if (std::abs(v) > static_cast<double>(kMaxDuration.value)) throw std::invalid_argument("time out of range");
  return TimePs{static_cast<std::int64_t>(std::llround(v))};
}

constexpr TimeUnit kPs{1.0};
constexpr TimeUnit kNs{1e3};

struct Field {
  std::string section;
  std::string key;
  std::function<void(std::string_view)> parse;
  std::function<std::string()> format;

  std::string path() const { return section + "." + key; }
};

template <class T>
Field number_field(std::string section, std::string key, T& ref) {
  Field f{std::move(section), std::move(key), {}, {}};
  if constexpr (std::is_floating_point_v<T>) {
    f.parse = [&ref](std::string_view s) { ref = parse_double(s); };
    f.format = [&ref] { return format_number(ref); };
  } else {
    f.parse = [&ref](std::string_view s) { ref = parse_int<T>(s); };
    f.format = [&ref] { return std::to_string(ref); };
  }
  return f;
}

Field time_field(std::string section, std::string key, TimePs& ref, TimeUnit unit) {
  return {std::move(section), std::move(key), [&ref, unit](std::string_view s) { ref = parse_time(s, unit); },
          [&ref, unit] { return format_time(ref, unit); }};
}

Field curve_field(std::string section, std::string key, SpectralCurve& ref) {
  return {std::move(section), std::move(key), [&ref](std::string_view s) { ref = parse_curve(s); },
          [&ref] { return format_curve(ref); }};
}

Field channel_field(std::string section, std::string key, Channel& ref) {
  return {std::move(section), std::move(key), [&ref](std::string_view s) { ref = parse_channel(s); },
          [&ref] { return format_channel(ref); }};
}

std::vector<Field> fields_of(SimConfig& c) {
  std::vector<Field> f;
  f.push_back(number_field("run", "duration_s", c.duration_s));
  f.push_back(number_field("run", "seed", c.seed));
  f.push_back(number_field("run", "max_generation", c.max_generation));

  for (std::size_t i = 0; i < 2; ++i) {
    const std::string s = "apd" + std::to_string(i + 1);
    auto& a = c.apd[i];
    f.push_back(number_field(s, "dark_rate_hz", a.dark_rate));
    f.push_back(curve_field(s, "qe", a.qe_curve));
    f.push_back(time_field(s, "dead_time_ns", a.dead_time, kNs));
    f.push_back(number_field(s, "afterpulse_prob", a.afterpulse_prob));
    f.push_back(time_field(s, "afterpulse_delay_ns", a.afterpulse_mean_delay, kNs));
    f.push_back(number_field(s, "flash_mean_photons", a.flash_mean_photons));
    f.push_back(curve_field(s, "flash_spectrum", a.flash_spectrum));
    f.push_back(time_field(s, "jitter_ps", a.jitter_sigma, kPs));
  }

  f.push_back({"topology", "element",
               [&c](std::string_view s) {
                 s = trim(s);
                 if (s == "none") {
                   c.topology.element = std::monostate{};
                 } else if (s == "bandpass") {
                   c.topology.element = c.bandpass;
                 } else if (s == "monochromator") {
                   c.topology.element = c.monochromator;
                 } else {
                   throw std::invalid_argument("element must be none, bandpass or monochromator");
                 }
               },
               [&c] {
                 if (std::holds_alternative<Bandpass>(c.topology.element)) return std::string("bandpass");
                 if (std::holds_alternative<MonochromatorParams>(c.topology.element)) {
                   return std::string("monochromator");
                 }
                 return std::string("none");
               }});
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string s = std::string("segment.") + kSegmentNames[i];
    f.push_back(time_field(s, "delay_ns", c.topology.segments[i].delay, kNs));
    f.push_back(curve_field(s, "transmission", c.topology.segments[i].transmission));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    f.push_back(number_field(std::string("joint.") + kJointNames[i], "reflectance", c.topology.joints[i].reflectance));
  }

  f.push_back(curve_field("bandpass", "transmission", c.bandpass.transmission));

  auto& m = c.monochromator;
  f.push_back(number_field("monochromator", "lines_per_mm", m.lines_per_mm));
  f.push_back(number_field("monochromator", "order", m.diffraction_order));
  f.push_back({"monochromator", "geometry",
               [&m](std::string_view s) {
                 s = trim(s);
                 if (s == "littrow") {
                   m.geometry = GratingGeometry::Littrow;
                 } else if (s == "fixed-deviation") {
                   m.geometry = GratingGeometry::FixedDeviation;
                 } else {
                   throw std::invalid_argument("geometry must be littrow or fixed-deviation");
                 }
               },
               [&m] { return std::string(m.geometry == GratingGeometry::Littrow ? "littrow" : "fixed-deviation"); }});
  f.push_back(number_field("monochromator", "deviation_deg", m.deviation_deg));
  f.push_back(number_field("monochromator", "angle_deg", m.angle_deg));
  f.push_back(number_field("monochromator", "fwhm_nm", m.response_fwhm_nm));
  f.push_back(number_field("monochromator", "peak_transmission", m.peak_transmission));

  f.push_back(time_field("scope", "record_window_ns", c.scope.record_window, kNs));
  f.push_back(time_field("scope", "resolution_ps", c.scope.resolution, kPs));
  f.push_back(time_field("scope", "processing_dead_time_ns", c.scope.processing_dead_time, kNs));
  f.push_back(channel_field("scope", "trigger_channel", c.scope.trigger_channel));
  f.push_back(time_field("scope", "electrical_delay_ns", c.scope.electrical_delay, kNs));

  f.push_back(time_field("coincidence", "window_ps", c.coincidence.window, kPs));
  f.push_back(time_field("coincidence", "electrical_delay_ns", c.coincidence.electrical_delay, kNs));
  f.push_back(channel_field("coincidence", "delayed_channel", c.coincidence.delayed_channel));
  return f;
}

using LineMap = std::map<std::string, int>;

class Checker {
 public:
  explicit Checker(const LineMap& lines) : lines_(lines) {}

  void require(bool ok, const std::string& path, const std::string& msg) const {
    if (!ok) {
      auto it = lines_.find(path);
      throw ConfigError(path, it == lines_.end() ? 0 : it->second, msg);
    }
  }

  void unit_interval(double v, const std::string& path) const {
    require(v >= 0.0 && v <= 1.0, path, "value " + format_number(v) + " outside [0, 1]");
  }

  void unit_curve(const SpectralCurve& c, const std::string& path) const {
    require(c.min_value() >= 0.0 && c.max_value() <= 1.0, path, "curve values must lie in [0, 1]");
  }

 private:
  const LineMap& lines_;
};

void check(const SimConfig& c, const LineMap& lines) {
  const Checker k(lines);
  k.require(c.duration_s > 0.0 && c.duration_s <= kMaxDuration.seconds(), "run.duration_s",
            "duration must be in (0, 1e5] s");
  k.require(c.max_generation >= 1 && c.max_generation <= 16, "run.max_generation", "must be in [1, 16]");

  for (std::size_t i = 0; i < 2; ++i) {
    const std::string s = "apd" + std::to_string(i + 1) + ".";
    const auto& a = c.apd[i];
    k.require(a.dark_rate >= 0.0, s + "dark_rate_hz", "must be >= 0");
    k.require(a.dead_time.value >= 0, s + "dead_time_ns", "must be >= 0");
    k.require(a.dark_rate * a.dead_time.seconds() < 1.0, s + "dark_rate_hz",
              "dark rate times dead time must be below 1");
    k.unit_curve(a.qe_curve, s + "qe");
    k.unit_interval(a.afterpulse_prob, s + "afterpulse_prob");
    k.require(a.afterpulse_mean_delay.value >= 0, s + "afterpulse_delay_ns", "must be >= 0");
    k.require(a.flash_mean_photons >= 0.0 && a.flash_mean_photons <= 500.0, s + "flash_mean_photons",
              "must be in [0, 500]");
    k.require(!a.flash_spectrum.is_flat(), s + "flash_spectrum", "emission spectrum needs explicit knots");
    k.require(a.flash_spectrum.min_value() >= 0.0, s + "flash_spectrum", "density must be >= 0");
    k.require(a.flash_mean_photons == 0.0 || a.flash_spectrum.integral() > 0.0, s + "flash_spectrum",
              "degenerate spectrum");
    k.require(a.jitter_sigma.value >= 0, s + "jitter_ps", "must be >= 0");
  }

  for (std::size_t i = 0; i < 3; ++i) {
    const std::string s = std::string("segment.") + kSegmentNames[i] + ".";
    k.require(c.topology.segments[i].delay.value >= 0, s + "delay_ns", "must be >= 0");
    k.unit_curve(c.topology.segments[i].transmission, s + "transmission");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    k.unit_interval(c.topology.joints[i].reflectance, std::string("joint.") + kJointNames[i] + ".reflectance");
  }
  k.unit_curve(c.bandpass.transmission, "bandpass.transmission");

  const auto& m = c.monochromator;
  k.require(m.lines_per_mm > 0.0, "monochromator.lines_per_mm", "must be > 0");
  k.require(m.diffraction_order >= 1, "monochromator.order", "must be >= 1");
  k.require(m.response_fwhm_nm > 0.0, "monochromator.fwhm_nm", "must be > 0");
  k.unit_interval(m.peak_transmission, "monochromator.peak_transmission");
  k.require(m.deviation_deg >= 0.0 && m.deviation_deg < 180.0, "monochromator.deviation_deg",
            "must be in [0, 180)");
  for (const auto* mono : {&m, std::get_if<MonochromatorParams>(&c.topology.element)}) {
    if (!mono) continue;
    try {
      grating_center_wavelength(*mono);
    } catch (const GratingError& e) {
      k.require(false, "monochromator.angle_deg", e.what());
    }
  }

  const auto& sc = c.scope;
  k.require(sc.resolution.value > 0, "scope.resolution_ps", "must be > 0");
  k.require(sc.record_window.value > 0, "scope.record_window_ns", "must be > 0");
  k.require(sc.resolution.value > 0 && sc.record_window.value % sc.resolution.value == 0, "scope.resolution_ps",
            "resolution must divide the record window");
  k.require(sc.processing_dead_time >= sc.record_window, "scope.processing_dead_time_ns",
            "must be >= record window");
  k.require(c.coincidence.window.value > 0, "coincidence.window_ps", "must be > 0");
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_curve(const SpectralCurve& curve) {
  if (curve.is_flat()) return format_number(curve.flat_value());
  std::string out;
  for (const auto& k : curve.knots()) {
    if (!out.empty()) out += ", ";
    out += format_number(k.wavelength_nm) + ":" + format_number(k.value);
  }
  return out;
}

SpectralCurve parse_curve(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '[' && text.back() == ']') text = trim(text.substr(1, text.size() - 2));
  if (text.empty()) return SpectralCurve{};
  if (text.find(':') == std::string_view::npos) return SpectralCurve::flat(parse_double(text));
  std::vector<Knot> knots;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("curve knot must be nm:value");
    knots.push_back({parse_double(item.substr(0, colon)), parse_double(item.substr(colon + 1))});
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return SpectralCurve(std::move(knots));
}

SimConfig default_config() {
  SimConfig c;
  const SpectralCurve qe({{950, 0.0},
                          {1000, 0.03},
                          {1100, 0.07},
                          {1300, 0.10},
                          {1400, 0.09},
                          {1550, 0.08},
                          {1600, 0.06},
                          {1640, 0.01},
                          {1650, 0.0}});
  const SpectralCurve flash({{950, 1.0}, {1700, 1.0}});
  for (auto& a : c.apd) {
    a.qe_curve = qe;
    a.flash_spectrum = flash;
  }
  // Calibrated to coincidence probabilities of 0.44% (1->2) and 0.42% (2->1).
  c.apd[0].flash_mean_photons = 0.1376;
  c.apd[1].flash_mean_photons = 0.1419;
  c.apd[0].dark_rate = 9550.0;
  c.apd[1].dark_rate = 5460.0;

  c.topology.segments = {Segment{"AB", TimePs{15'500}, SpectralCurve::flat(0.97)},
                         Segment{"BC", TimePs{1'500}, SpectralCurve::flat(0.946)},
                         Segment{"CD", TimePs{15'500}, SpectralCurve::flat(0.97)}};
  c.topology.joints = {Joint{'A', 1e-2}, Joint{'B', 1e-3}, Joint{'C', 1e-3}, Joint{'D', 1e-2}};
  c.bandpass.transmission = SpectralCurve({{1544.5, 0.0}, {1545, 0.85}, {1555, 0.85}, {1555.5, 0.0}});
  return c;
}

SimConfig validate_config(std::string_view text) {
  SimConfig c = default_config();
  auto fields = fields_of(c);
  std::map<std::string, std::size_t> by_path;
  for (std::size_t i = 0; i < fields.size(); ++i) by_path[fields[i].path()] = i;

  LineMap lines;
  std::string section;
  std::string pending_element;
  int element_line = 0;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(std::string(line), line_no, "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& f : fields) known = known || f.section == section;
      if (!known) throw ConfigError(section, line_no, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(section, line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string path = section + "." + key;
    if (section.empty()) throw ConfigError(key, line_no, "key outside of any section");
    auto it = by_path.find(path);
    if (it == by_path.end()) throw ConfigError(path, line_no, "unknown key");
    if (lines.count(path)) throw ConfigError(path, line_no, "duplicate key");
    lines[path] = line_no;
    const auto value = trim(line.substr(eq + 1));
    if (path == "topology.element") {
      // Resolved after the element's own section has been read.
      pending_element = std::string(value);
      element_line = line_no;
      continue;
    }
    try {
      fields[it->second].parse(value);
    } catch (const std::exception& e) {
      throw ConfigError(path, line_no, e.what());
    }
  }
  if (!pending_element.empty()) {
    try {
      fields[by_path.at("topology.element")].parse(pending_element);
    } catch (const std::exception& e) {
      throw ConfigError("topology.element", element_line, e.what());
    }
  }
  check(c, lines);
  return c;
}

void check_config(const SimConfig& config) { check(config, {}); }

std::string serialize_config(const SimConfig& config) {
  SimConfig copy = config;
  // The installed element is what a run sees, so it wins over the stored section.
  if (const auto* bp = std::get_if<Bandpass>(&copy.topology.element)) copy.bandpass = *bp;
  if (const auto* m = std::get_if<MonochromatorParams>(&copy.topology.element)) copy.monochromator = *m;
  const auto fields = fields_of(copy);
  std::string out;
  std::string section;
  for (const auto& f : fields) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.format() + "\n";
  }
  return out;
}

SimConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

}  // namespace flashsim
