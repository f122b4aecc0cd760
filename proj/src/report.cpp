#include "flashsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flashsim/config.hpp"

namespace flashsim {

namespace {

std::string num(double v) { return format_number(v); }

std::vector<std::vector<std::string>> parse_rows(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw IoError("expected CSV header '" + header + "'");
  const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) throw IoError("malformed CSV row: " + line);
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T parse_cell(const std::string& s) {
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) throw IoError("bad CSV value: " + s);
  return v;
}

}  // namespace

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_start_ps,count\n";
  for (std::size_t i = 0; i < h.size(); ++i) {
    out += std::to_string(h.bin_start(i).value) + "," + std::to_string(h.counts[i]) + "\n";
  }
  return out;
}

std::string peaks_csv(const std::vector<Peak>& peaks) {
  std::string out = "center_ps,height,fwhm_ps,area\n";
  for (const auto& p : peaks) {
    out += num(p.center_ps) + "," + num(p.height) + "," + num(p.fwhm_ps) + "," + num(p.area) + "\n";
  }
  return out;
}

std::string coincidence_csv(const CoincidenceReport& report) {
  std::string out = "direction,count,duration_s,rate_hz,rate_err_hz\n";
  for (const auto& r : report.rows) {
    out += r.direction + "," + std::to_string(r.count) + "," + num(r.duration_s) + "," + num(r.rate_hz) + "," +
           num(r.rate_err_hz) + "\n";
  }
  return out;
}

std::string probability_csv(const CoincidenceReport& report) {
  std::string out = "direction,emitter_rate_hz,p,p_err,suppression,suppression_is_bound\n";
  for (const auto& r : report.rows) {
    std::string supp = ",";
    if (r.direction.ends_with("_filtered")) {
      const auto base = r.direction.substr(0, r.direction.size() - 9);
      for (const auto& s : report.suppression) {
        if (s.direction == base) supp = num(s.suppression.factor) + "," + (s.suppression.lower_bound ? "1" : "0");
      }
    }
    out += r.direction + "," + num(r.emitter_rate_hz) + "," + num(r.probability.p) + "," +
           num(r.probability.sigma) + "," + supp + "\n";
  }
  return out;
}

std::string spectrum_csv(const SpectrumTable& table) {
  std::string out = "lambda_nm,rate12_hz,err12,rate21_hz,err21,baseline_hz\n";
  for (const auto& r : table) {
    out += num(r.lambda_nm) + "," + num(r.rate12) + "," + num(r.err12) + "," + num(r.rate21) + "," + num(r.err21) +
           "," + num(r.baseline) + "\n";
  }
  return out;
}

std::string trace_csv(const EventTrace& trace) {
  struct Row {
    TimePs time;
    int channel;
    const Pulse* pulse;
  };
  std::vector<Row> rows;
  rows.reserve(trace.channels[0].size() + trace.channels[1].size());
  for (int c = 0; c < 2; ++c) {
    for (const auto& p : trace.channels[static_cast<std::size_t>(c)]) rows.push_back({p.time, c + 1, &p});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.time != b.time ? a.time < b.time : a.channel < b.channel;
  });
  std::string out = "time_ps,channel,truth_label,generation\n";
  for (const auto& r : rows) {
    out += std::to_string(r.time.value) + "," + std::to_string(r.channel) + "," + truth_label(r.pulse->truth) + "," +
           std::to_string(r.pulse->generation) + "\n";
  }
  return out;
}

Histogram parse_histogram_csv(const std::string& text) {
  const auto rows = parse_rows(text, "bin_start_ps,count");
  Histogram h;
  if (rows.size() >= 2) {
    h.bin_width = TimePs{parse_cell<std::int64_t>(rows[1][0]) - parse_cell<std::int64_t>(rows[0][0])};
  }
  if (!rows.empty()) h.t0 = TimePs{parse_cell<std::int64_t>(rows[0][0])};
  for (const auto& r : rows) h.counts.push_back(parse_cell<std::uint64_t>(r[1]));
  return h;
}

std::vector<Peak> parse_peaks_csv(const std::string& text) {
  std::vector<Peak> peaks;
  for (const auto& r : parse_rows(text, "center_ps,height,fwhm_ps,area")) {
    peaks.push_back({parse_cell<double>(r[0]), parse_cell<double>(r[1]), parse_cell<double>(r[2]),
                     parse_cell<double>(r[3])});
  }
  return peaks;
}

SpectrumTable parse_spectrum_csv(const std::string& text) {
  SpectrumTable t;
  for (const auto& r : parse_rows(text, "lambda_nm,rate12_hz,err12,rate21_hz,err21,baseline_hz")) {
    t.push_back({parse_cell<double>(r[0]), parse_cell<double>(r[1]), parse_cell<double>(r[2]),
                 parse_cell<double>(r[3]), parse_cell<double>(r[4]), parse_cell<double>(r[5])});
  }
  return t;
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

std::string svg_open(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<g stroke=\"black\" fill=\"none\">"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
    << kHeight - kMargin << "\"/>"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
    << "\"/></g>\n"
    << "<g font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n"
    << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15 " << kHeight / 2
    << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s << "<text x=\"" << num(f.px(x)) << "\" y=\"" << kHeight - kMargin + 16 << "\" text-anchor=\"middle\">"
      << num(std::round(x * 10) / 10) << "</text>\n";
    s << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(f.py(y) + 4) << "\" text-anchor=\"end\">"
      << num(std::round(y * 1000) / 1000) << "</text>\n";
  }
  s << "</g>\n";
  return s.str();
}

std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y,
                     const std::string& colour) {
  std::string pts;
  for (std::size_t i = 0; i < x.size(); ++i) pts += num(f.px(x[i])) + "," + num(f.py(y[i])) + " ";
  return "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

}  // namespace

std::string histogram_svg(const Histogram& h, const std::vector<Peak>& peaks) {
  std::vector<double> x;
  std::vector<double> y;
  double ymax = 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    x.push_back(h.bin_center_ps(i) * 1e-3);
    y.push_back(static_cast<double>(h.counts[i]));
    ymax = std::max(ymax, y.back());
  }
  const double x0 = x.empty() ? 0.0 : x.front();
  const double x1 = x.size() < 2 ? x0 + 1.0 : x.back();
  const Frame f{x0, x1, 0.0, ymax * 1.05};
  std::string out = svg_open(f, "time (ns)", "counts");
  out += polyline(f, x, y, "steelblue");
  for (const auto& p : peaks) {
    const double cx = p.center_ps * 1e-3;
    out += "<line stroke=\"firebrick\" stroke-dasharray=\"4 3\" x1=\"" + num(f.px(cx)) + "\" y1=\"" +
           num(f.py(0.0)) + "\" x2=\"" + num(f.px(cx)) + "\" y2=\"" + num(f.py(p.height)) + "\"/>\n";
  }
  return out + "</svg>\n";
}

std::string spectrum_svg(const SpectrumTable& table) {
  std::vector<double> x;
  std::vector<double> r12;
  std::vector<double> r21;
  std::vector<double> base;
  double ymax = 1e-9;
  for (const auto& r : table) {
    x.push_back(r.lambda_nm);
    r12.push_back(r.rate12);
    r21.push_back(r.rate21);
    base.push_back(r.baseline);
    ymax = std::max({ymax, r.rate12 + r.err12, r.rate21 + r.err21});
  }
  const double x0 = x.empty() ? 0.0 : x.front();
  const double x1 = x.size() < 2 ? x0 + 1.0 : x.back();
  const Frame f{x0, x1, 0.0, ymax * 1.05};
  std::string out = svg_open(f, "wavelength (nm)", "coincidence rate (1/s)");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = table[i];
    out += "<line stroke=\"steelblue\" x1=\"" + num(f.px(r.lambda_nm)) + "\" y1=\"" +
           num(f.py(std::max(0.0, r.rate12 - r.err12))) + "\" x2=\"" + num(f.px(r.lambda_nm)) + "\" y2=\"" +
           num(f.py(r.rate12 + r.err12)) + "\"/>\n";
  }
  out += polyline(f, x, r12, "steelblue");
  out += polyline(f, x, r21, "darkorange");
  out += polyline(f, x, base, "gray");
  return out + "</svg>\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace flashsim
