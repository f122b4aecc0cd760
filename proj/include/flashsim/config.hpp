#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "flashsim/model.hpp"

namespace flashsim {

/// Raised for any malformed or out-of-range configuration entry. `line` is 0
/// when the offending value came from a built-in default.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& message);

  const std::string& key() const { return key_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string key_;
  int line_;
  std::string message_;
};

/// Built-in defaults; `validate_config("")` returns the same value.
SimConfig default_config();

/// Parses `[section]` / `key = value` text on top of the defaults and checks
/// every invariant. Curves are written as `nm:value, nm:value, ...`; a bare
/// number denotes a wavelength-independent curve.
SimConfig validate_config(std::string_view text);

/// Re-checks invariants of an in-memory config (line numbers are 0).
void check_config(const SimConfig& config);

/// Canonical text form; `validate_config(serialize_config(c)) == c`.
std::string serialize_config(const SimConfig& config);

SimConfig load_config_file(const std::string& path);

std::string format_number(double v);
std::string format_curve(const SpectralCurve& curve);
SpectralCurve parse_curve(std::string_view text);

}  // namespace flashsim
