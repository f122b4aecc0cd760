// flashsim command-line front end.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 I/O error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "flashsim/calibration.hpp"
#include "flashsim/config.hpp"
#include "flashsim/report.hpp"
#include "flashsim/scenarios.hpp"

namespace fs = std::filesystem;
using namespace flashsim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool filtered = false;
  std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c, bool with_filter) {
  cmd->add_option("--config", c.config_path, "INI configuration file (defaults when omitted)");
  cmd->add_option("--seed", c.seed, "Override [run] seed");
  cmd->add_option("--duration", c.duration, "Simulated seconds (per point for spectral-scan)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
  if (with_filter) cmd->add_flag("--filtered", c.filtered, "Insert the configured bandpass in B-C");
}

SimConfig load(const Common& c) {
  SimConfig cfg = c.config_path.empty() ? default_config() : load_config_file(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.duration) cfg.duration_s = *c.duration;
  check_config(cfg);
  return cfg;
}

void print_peaks(const std::vector<Peak>& peaks) {
  for (const auto& p : peaks) {
    std::printf("peak %8.3f ns  height %10.1f  fwhm %6.1f ps  area %10.1f\n", p.center_ps * 1e-3, p.height, p.fwhm_ps,
                p.area);
  }
}

int cmd_histogram(const Common& c, bool trace, double prominence) {
  const SimConfig cfg = load(c);
  const fs::path out = c.out;
  if (trace) write_file(out / "trace.csv", trace_csv(histogram_trace(cfg, c.filtered)));
  const auto report = run_histogram(cfg, c.filtered, prominence);
  const auto hcsv = histogram_csv(report.histogram);
  const auto pcsv = peaks_csv(report.peaks);
  write_file(out / "histogram.csv", hcsv);
  write_file(out / "peaks.csv", pcsv);
  write_file(out / "histogram.svg", histogram_svg(parse_histogram_csv(hcsv), parse_peaks_csv(pcsv)));
  std::printf("%llu captured events in %zu bins\n", static_cast<unsigned long long>(report.histogram.total()),
              report.histogram.size());
  print_peaks(report.peaks);
  return 0;
}

int cmd_coincidence(const Common& c, std::optional<double> target, int emitter) {
  SimConfig cfg = load(c);
  if (target) {
    CalibrationOptions opts;
    opts.emitter = emitter == 1 ? Channel::Apd1 : Channel::Apd2;
    const double mu = calibrate_flash_mu(*target, cfg, opts);
    cfg.apd[index(opts.emitter)].flash_mean_photons = mu;
    std::printf("calibrated apd%d flash_mean_photons = %s\n", emitter, format_number(mu).c_str());
  }
  const auto report = run_coincidence(cfg, c.filtered);
  const fs::path out = c.out;
  write_file(out / "coincidence.csv", coincidence_csv(report));
  write_file(out / "probability.csv", probability_csv(report));
  for (const auto& r : report.rows) {
    std::printf("%-14s %10llu  %10.4f +- %.4f /s   p = %.5f%% +- %.5f%%\n", r.direction.c_str(),
                static_cast<unsigned long long>(r.count), r.rate_hz, r.rate_err_hz, 100 * r.probability.p,
                100 * r.probability.sigma);
  }
  for (const auto& s : report.suppression) {
    std::printf("suppression %s: %s%.1f\n", s.direction.c_str(), s.suppression.lower_bound ? ">= " : "",
                s.suppression.factor);
  }
  std::printf("accidentals expected %.4f /s\n", report.accidental_oracle_hz);
  return 0;
}

int cmd_scan(const Common& c, const ScanOptions& base) {
  SimConfig cfg = load(c);
  ScanOptions opts = base;
  opts.seconds_per_point = c.duration.value_or(opts.seconds_per_point);
  const auto table = run_spectral_scan(cfg, opts);
  const auto csv = spectrum_csv(table);
  const fs::path out = c.out;
  write_file(out / "spectrum.csv", csv);
  write_file(out / "spectrum.svg", spectrum_svg(parse_spectrum_csv(csv)));
  const auto& peak = table[argmax_rate12(table)];
  std::printf("%zu points, %.1f-%.1f nm, 1->2 maximum at %.1f nm\n", table.size(), table.front().lambda_nm,
              table.back().lambda_nm, peak.lambda_nm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Breakdown-flash side-channel simulator"};
  app.require_subcommand(1);

  Common common;
  bool dump = false;
  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("config,--config", common.config_path, "INI configuration file");
  validate->add_flag("--dump", dump, "Print the canonical form");

  bool trace = false;
  double prominence = kDefaultProminence;
  auto* histogram = app.add_subcommand("histogram", "Oscilloscope timing histogram");
  add_common(histogram, common, true);
  histogram->add_flag("--trace", trace, "Also write the raw pulse trace of the first chunk");
  histogram->add_option("--prominence", prominence, "Peak threshold in baseline standard deviations")
      ->check(CLI::PositiveNumber);

  std::optional<double> target;
  int emitter = 1;
  auto* coincidence = app.add_subcommand("coincidence", "Coincidence rates, probabilities and accidentals");
  add_common(coincidence, common, true);
  coincidence->add_option("--calibrate", target, "Fit the emitter's flash_mean_photons to this probability")
      ->check(CLI::Range(0.0, 1.0));
  coincidence->add_option("--emitter", emitter, "Emitter for --calibrate")->check(CLI::IsMember({1, 2}));

  ScanOptions scan;
  auto* spectral = app.add_subcommand("spectral-scan", "Monochromator sweep of the flash spectrum");
  add_common(spectral, common, false);
  spectral->add_option("--samples", scan.samples, "Number of grating angles")->check(CLI::Range(2, 100000));
  spectral->add_option("--angle-step", scan.angle_step_deg, "Grating step in degrees");
  spectral->add_option("--start-nm", scan.start_nm, "Centre wavelength of the first sample")
      ->check(CLI::PositiveNumber);
  spectral->add_option("--band", scan.band_fwhm,
                       "Emit only within this many response FWHM of each centre (0 = full spectrum)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*validate) {
      const SimConfig cfg = common.config_path.empty() ? default_config() : load_config_file(common.config_path);
      if (dump) std::cout << serialize_config(cfg);
      else std::printf("configuration ok\n");
      return 0;
    }
    if (*histogram) return cmd_histogram(common, trace, prominence);
    if (*coincidence) return cmd_coincidence(common, target, emitter);
    if (*spectral) return cmd_scan(common, scan);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
