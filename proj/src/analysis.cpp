#include "flashsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flashsim {

double histogram_baseline(const Histogram& h) {
  if (h.counts.empty()) return 0.0;
  std::vector<std::uint64_t> sorted = h.counts;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  double m = static_cast<double>(*mid);
  if (sorted.size() % 2 == 0) {
    const auto lower = *std::max_element(sorted.begin(), mid);
    m = 0.5 * (m + static_cast<double>(lower));
  }
  return m;
}

namespace {

/// Height above baseline at the apex: a parabola through the log of the three
/// bins around the maximum recovers a sampled Gaussian exactly.
double apex_height(const std::vector<double>& y, std::size_t m) {
  const double raw = y[m];
  if (m == 0 || m + 1 >= y.size() || y[m - 1] <= 0.0 || y[m + 1] <= 0.0 || raw <= 0.0) return raw;
  const double l0 = std::log(y[m - 1]);
  const double l1 = std::log(raw);
  const double l2 = std::log(y[m + 1]);
  const double curv = l0 - 2.0 * l1 + l2;
  if (curv >= 0.0) return raw;
  const double delta = 0.5 * (l0 - l2) / curv;
  if (std::abs(delta) > 1.0) return raw;
  return std::exp(l1 - 0.25 * (l0 - l2) * delta);
}

}  // namespace

std::vector<Peak> find_peaks(const Histogram& h, double min_prominence) {
  if (!(min_prominence > 0.0)) throw std::invalid_argument("min_prominence must be positive");
  const std::size_t n = h.counts.size();
  std::vector<Peak> peaks;
  if (n < 3) return peaks;

  const double baseline = histogram_baseline(h);
  const double threshold = baseline + min_prominence * std::sqrt(std::max(baseline, 1.0));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<double>(h.counts[i]) - baseline;
  std::vector<double> smooth(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(n - 1, i + 1);
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += y[k];
    smooth[i] = s / static_cast<double>(hi - lo + 1);
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const bool rise = i == 0 || smooth[i] > smooth[i - 1];
    const bool fall = i + 1 == n || smooth[i] >= smooth[i + 1];
    if (!(rise && fall)) continue;
    std::size_t m = i;
    for (std::size_t k = (i == 0 ? 0 : i - 1); k <= std::min(n - 1, i + 1); ++k) {
      if (y[k] > y[m]) m = k;
    }
    if (static_cast<double>(h.counts[m]) > threshold) candidates.push_back(m);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    return y[a] != y[b] ? y[a] > y[b] : a < b;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const double w = static_cast<double>(h.bin_width.value);
  for (const std::size_t m : candidates) {
    const double apex = apex_height(y, m);
    const double half = 0.5 * apex;

    double left = h.bin_center_ps(0);
    for (std::size_t k = m; k-- > 0;) {
      if (y[k] < half) {
        left = h.bin_center_ps(k) + w * (half - y[k]) / (y[k + 1] - y[k]);
        break;
      }
    }
    double right = h.bin_center_ps(n - 1);
    for (std::size_t k = m + 1; k < n; ++k) {
      if (y[k] < half) {
        right = h.bin_center_ps(k) - w * (half - y[k]) / (y[k - 1] - y[k]);
        break;
      }
    }
    Peak p;
    p.fwhm_ps = std::max(right - left, 1e-9);
    p.center_ps = 0.5 * (left + right);
    p.height = apex + baseline;

    bool merged = false;
    for (const auto& q : peaks) {
      if (std::abs(q.center_ps - p.center_ps) < std::max(q.fwhm_ps, p.fwhm_ps)) merged = true;
    }
    if (merged) continue;

    const double lo = left - p.fwhm_ps;
    const double hi = right + p.fwhm_ps;
    for (std::size_t k = 0; k < n; ++k) {
      const double c = h.bin_center_ps(k);
      if (c >= lo && c <= hi) p.area += y[k];
    }
    peaks.push_back(p);
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.center_ps < b.center_ps; });
  return peaks;
}

ProbabilityEstimate flash_probability(double coinc_rate, double emitter_rate, double duration_s) {
  if (!(emitter_rate > 0.0)) throw std::invalid_argument("emitter rate must be positive");
  if (coinc_rate < 0.0 || !(duration_s > 0.0)) throw std::invalid_argument("rates and duration must be positive");
  ProbabilityEstimate e;
  e.p = coinc_rate / emitter_rate;
  const double coinc = coinc_rate * duration_s;
  const double singles = emitter_rate * duration_s;
  if (coinc > 0.0) {
    e.sigma = e.p * (1.0 / std::sqrt(coinc) + 1.0 / (2.0 * std::sqrt(singles)));
  } else {
    e.sigma = kZeroCountUpper / duration_s / emitter_rate;
  }
  return e;
}

Suppression suppression_factor(const ProbabilityEstimate& unfiltered, const ProbabilityEstimate& filtered) {
  if (filtered.p > 0.0) return {unfiltered.p / filtered.p, false};
  if (!(filtered.sigma > 0.0)) throw std::invalid_argument("filtered probability has no upper limit");
  return {unfiltered.p / filtered.sigma, true};
}

double suppression_factor(double p_unfiltered, double p_filtered) {
  if (!(p_filtered > 0.0)) throw std::invalid_argument("filtered probability must be positive");
  return p_unfiltered / p_filtered;
}

double accidental_rate(double r1, double r2, TimePs window) {
  if (r1 < 0.0 || r2 < 0.0 || window.value < 0) throw std::invalid_argument("negative rate or window");
  return r1 * r2 * window.seconds();
}

double photon_number_bound(double p_detected, double qe, double channel_transmission) {
  if (!(qe > 0.0) || qe > 1.0) throw std::invalid_argument("qe must be in (0, 1]");
  if (!(channel_transmission > 0.0) || channel_transmission > 1.0) {
    throw std::invalid_argument("channel transmission must be in (0, 1]");
  }
  if (p_detected < 0.0) throw std::invalid_argument("probability must be >= 0");
  return p_detected / (qe * channel_transmission);
}

SpectrumTable assemble_spectrum(std::span<const ScanPoint> points) {
  if (points.size() < 2) throw std::invalid_argument("a spectrum needs at least two wavelengths");
  SpectrumTable table;
  table.reserve(points.size());
  for (const auto& pt : points) {
    if (!(pt.duration_s > 0.0)) throw std::invalid_argument("scan point without integration time");
    auto err = [&](std::uint64_t c) {
      return c > 0 ? std::sqrt(static_cast<double>(c)) / pt.duration_s : kZeroCountUpper / pt.duration_s;
    };
    table.push_back({pt.lambda_nm, static_cast<double>(pt.count12) / pt.duration_s, err(pt.count12),
                     static_cast<double>(pt.count21) / pt.duration_s, err(pt.count21),
                     accidental_rate(pt.singles1, pt.singles2, pt.window)});
  }
  std::stable_sort(table.begin(), table.end(),
                   [](const SpectrumRow& a, const SpectrumRow& b) { return a.lambda_nm < b.lambda_nm; });
  return table;
}

std::size_t argmax_rate12(const SpectrumTable& t) {
  return static_cast<std::size_t>(std::max_element(t.begin(), t.end(), [](const auto& a, const auto& b) {
                                    return a.rate12 < b.rate12;
                                  }) -
                                  t.begin());
}

std::size_t argmax_rate21(const SpectrumTable& t) {
  return static_cast<std::size_t>(std::max_element(t.begin(), t.end(), [](const auto& a, const auto& b) {
                                    return a.rate21 < b.rate21;
                                  }) -
                                  t.begin());
}

ResponseShape response_shape(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("need at least three samples");
  const auto m = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  ResponseShape s;
  s.peak = y[m];
  const double half = 0.5 * s.peak;
  double left = x.front();
  for (std::size_t k = m; k-- > 0;) {
    if (y[k] < half) {
      left = x[k] + (x[k + 1] - x[k]) * (half - y[k]) / (y[k + 1] - y[k]);
      break;
    }
  }
  double right = x.back();
  for (std::size_t k = m + 1; k < x.size(); ++k) {
    if (y[k] < half) {
      right = x[k] - (x[k] - x[k - 1]) * (half - y[k]) / (y[k - 1] - y[k]);
      break;
    }
  }
  s.fwhm = right - left;
  s.center = 0.5 * (left + right);
  return s;
}

}  // namespace flashsim
