#pragma once

#include "cvtele/app/config.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvtele::app {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CommandOutput {
  std::string csv;                  // header row plus data rows
  nlohmann::ordered_json summary;   // config echo, derived values, results
  int exit_code = 0;
};

const std::vector<std::string>& command_names();

/// Runs a command in-process. Throws UsageError for unknown names and
/// ConfigError when the config does not suit the command.
CommandOutput run_command(const std::string& name, const ExperimentConfig& config);

/// Runs a command and writes <output_dir>/<name>.csv and/or .json.
/// Returns the process exit status: 0 ok, 1 selfcheck failure, 2 usage or
/// config error.
int execute(const std::string& name, const ExperimentConfig& config, std::ostream& log);

/// 17 significant digits, the CSV number format.
std::string format_number(double value);

}  // namespace cvtele::app
