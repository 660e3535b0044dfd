#pragma once

#include "cvtele/gaussian.hpp"
#include "cvtele/interaction.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvtele::app {

/// Invalid configuration; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class OutputFormat { csv, json, both };

/// Fully resolved experiment configuration. Defaults are the measured setup.
struct ExperimentConfig {
  // Decay entry form: exactly one of gamma (total) or gamma_s is supplied.
  // When neither is, gamma = 99.3.
  std::optional<double> gamma;
  std::optional<double> gamma_s;
  double gamma_extra = 26.3;
  double Z2 = 6.3;
  double m = 1.3;
  double eta_A = 0.89;
  double eta_B = 0.80;
  double omega_larmor = 2.0 * 3.14159265358979323846 * 322e3;
  double teleport_T = 3e-3;
  double readout_T = 2e-3;

  std::optional<double> gain;  // empty: "optimal"
  std::vector<double> nbar_grid{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> gains_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6};
  std::vector<QuadraturePair> inputs{{0.0, 0.0}, {4.0, -3.0}};
  QuadraturePair input{3.0, -2.0};

  std::size_t n_runs = 10000;
  std::uint64_t seed = 20120701;
  unsigned workers = 0;

  double cycle_rate = 50.0;
  std::size_t n_cycles = 10000;
  std::size_t window = 25;
  double transfer = 0.8;
  double amplitude = 8.0;

  std::string output_dir = "out";
  OutputFormat format = OutputFormat::both;

  /// Physical parameters with T set to the teleportation pulse.
  PhysicalParams params() const;
  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Sets one key from its textual value, as a config line would.
void set_key(ExperimentConfig& config, const std::string& key, const std::string& value);

/// List syntax: comma separated numbers, or a:step:b ranges, or a mix.
std::vector<double> parse_list(const std::string& field, const std::string& text);

/// Every key with its resolved value, replayable through parse_config.
nlohmann::ordered_json to_json(const ExperimentConfig& config);
std::string to_config_text(const ExperimentConfig& config);

OutputFormat parse_format(const std::string& text);
std::string format_name(OutputFormat format);

}  // namespace cvtele::app
