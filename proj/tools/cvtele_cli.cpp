// cvtele: teleportation model runner. See README for commands and config keys.

#include "cvtele/app/commands.hpp"
#include "cvtele/app/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  using namespace cvtele::app;

  CLI::App cli{"Continuous-variable teleportation between atomic ensembles"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, format, nbar, gain;
  std::optional<std::size_t> runs;

  std::string names;
  for (const auto& n : command_names()) names += (names.empty() ? "" : ", ") + n;
  cli.add_option("command", command, "One of: " + names)->required();
  cli.add_option("--config", config_path, "key = value config file");
  cli.add_option("--seed", seed, "Monte Carlo seed");
  cli.add_option("--out", out_dir, "Output directory");
  cli.add_option("--format", format, "csv, json or both");
  cli.add_option("--nbar", nbar, "nbar grid, e.g. 0:1:10 or 1,7");
  cli.add_option("--gain", gain, "Feedback gain, a number or 'optimal'");
  cli.add_option("--runs", runs, "Monte Carlo runs (0: analytic variance-vs-gain)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 2;
  }

  const auto& known = command_names();
  if (std::find(known.begin(), known.end(), command) == known.end()) {
    std::cerr << "usage error: unknown command '" << command << "' (expected " << names << ")\n";
    return 2;
  }

  ExperimentConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (out_dir) config.output_dir = *out_dir;
    if (format) config.format = parse_format(*format);
    if (nbar) set_key(config, "nbar_grid", *nbar);
    if (gain) set_key(config, "gain", *gain);
    if (runs) config.n_runs = *runs;
    config.validate();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return execute(command, config, std::cerr);
}
