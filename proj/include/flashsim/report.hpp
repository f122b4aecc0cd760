#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashsim/analysis.hpp"
#include "flashsim/engine.hpp"
#include "flashsim/instruments.hpp"
#include "flashsim/scenarios.hpp"

namespace flashsim {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV text. Numbers use the shortest round-trip form, so output is
// byte-identical wherever the inputs are.
std::string histogram_csv(const Histogram& h);
std::string peaks_csv(const std::vector<Peak>& peaks);
std::string coincidence_csv(const CoincidenceReport& report);
std::string probability_csv(const CoincidenceReport& report);
std::string spectrum_csv(const SpectrumTable& table);
std::string trace_csv(const EventTrace& trace);

Histogram parse_histogram_csv(const std::string& text);
std::vector<Peak> parse_peaks_csv(const std::string& text);
SpectrumTable parse_spectrum_csv(const std::string& text);

std::string histogram_svg(const Histogram& h, const std::vector<Peak>& peaks);
std::string spectrum_svg(const SpectrumTable& table);

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace flashsim
