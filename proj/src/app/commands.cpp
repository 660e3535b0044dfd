#include "cvtele/app/commands.hpp"

#include "cvtele/montecarlo.hpp"
#include "cvtele/qnd.hpp"
#include "cvtele/teleport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace cvtele::app {

namespace {

using Json = nlohmann::ordered_json;

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    for (const char* h : header) cell(std::string(h));
    end();
  }

  Csv& cell(double v) { return cell(format_number(v)); }
  Csv& cell(std::size_t v) { return cell(std::to_string(v)); }
  Csv& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
  Csv& cell(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
    return *this;
  }
  Csv& cell(const char* s) { return cell(std::string(s)); }
  Csv& cells(std::initializer_list<double> values) {
    for (double v : values) cell(v);
    return *this;
  }
  void end() {
    text_ += '\n';
    first_ = true;
  }

  std::string str() const { return text_; }

 private:
  std::string text_;
  bool first_ = true;
};

Json base_summary(const std::string& name, const ExperimentConfig& c) {
  Json j;
  j["command"] = name;
  j["config"] = to_json(c);
  const PhysicalParams p = c.params();
  j["derived"] = {{"gamma", p.gamma()},
                  {"gamma_s", p.gamma_s},
                  {"Z", p.Z},
                  {"benchmark_note", "F_classical = (1 + nbar) / (1 + 2 nbar)"}};
  auto warnings = Json::array();
  for (const auto& w : p.warnings()) warnings.push_back(w);
  for (const auto& w : p.with_duration(c.readout_T).warnings()) warnings.push_back(w);
  j["warnings"] = warnings;
  return j;
}

Json coefficients_json(const InteractionCoefficients& k) {
  return {{"kappa", k.kappa}, {"c_y", k.c_y}, {"c_q", k.c_q}, {"c_N", k.c_N}};
}

// "optimal" resolves at the first entry of nbar_grid.
double resolve_gain(const ExperimentConfig& c, const TeleportChannel& channel) {
  if (c.gain) return *c.gain;
  return optimize_gain(channel, c.nbar_grid.front()).gain;
}

McOptions mc_options(const ExperimentConfig& c) {
  McOptions o;
  o.seed = c.seed;
  o.workers = c.workers;
  o.readout_T = c.readout_T;
  return o;
}

void require_runs(const ExperimentConfig& c, std::size_t minimum) {
  if (c.n_runs < minimum)
    throw ConfigError("n_runs", "must be >= " + std::to_string(minimum) + " for this command");
}

CommandOutput cmd_coeffs(const ExperimentConfig& c) {
  const PhysicalParams p = c.params();
  const CouplingRatios r = coupling_ratios(p.Z);
  Csv csv{"T", "kappa", "c_y", "c_q", "c_N", "mu", "nu"};
  for (double T : {c.readout_T, c.teleport_T}) {
    const auto k = readout_coefficients(p.with_duration(T));
    csv.cells({T, k.kappa, k.c_y, k.c_q, k.c_N, r.mu, r.nu}).end();
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("coeffs", c);
  out.summary["coefficients"] = coefficients_json(readout_coefficients(p.with_duration(c.readout_T)));
  out.summary["coefficients"]["T"] = c.readout_T;
  out.summary["teleport_coefficients"] =
      coefficients_json(readout_coefficients(p.with_duration(c.teleport_T)));
  out.summary["teleport_coefficients"]["T"] = c.teleport_T;
  out.summary["coupling"] = {{"mu", r.mu}, {"nu", r.nu}, {"mu_over_nu", r.mu / r.nu}};
  return out;
}

CommandOutput cmd_teleport(const ExperimentConfig& c) {
  const TeleportChannel channel = teleport_channel(c.params());
  const double g = resolve_gain(c, channel);
  const auto k = channel.coefficients(g);
  const double var = teleported_variance(k, channel.params.m);
  Csv csv{"gain", "c_B", "c_A", "c_NB", "c_NA", "c_y", "c_q", "var", "mean_x", "mean_p"};
  csv.cells({g, k.c_B, k.c_A, k.c_NB, k.c_NA, k.c_y, k.c_q, var, k.c_A * c.input.x,
             k.c_A * c.input.p})
      .end();
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("teleport", c);
  out.summary["results"] = {{"gain", g},  {"c_B", k.c_B},   {"c_A", k.c_A},
                            {"c_NB", k.c_NB}, {"c_NA", k.c_NA}, {"c_y", k.c_y},
                            {"c_q", k.c_q},  {"var", var}};
  auto fid = Json::array();
  for (double n : c.nbar_grid)
    fid.push_back({{"nbar", n},
                   {"F_avg", average_fidelity(channel, g, n)},
                   {"F_classical", classical_benchmark(n)}});
  out.summary["fidelity"] = fid;
  return out;
}

CommandOutput cmd_fidelity_sweep(const ExperimentConfig& c) {
  const TeleportChannel channel = teleport_channel(c.params());
  Csv csv{"nbar", "F_avg", "g_opt", "F_classical"};
  for (double n : c.nbar_grid) {
    double g = 0.0, f = 0.0;
    if (c.gain) {
      g = *c.gain;
      f = average_fidelity(channel, g, n);
    } else {
      const auto opt = optimize_gain(channel, n);
      g = opt.gain;
      f = opt.fidelity;
    }
    csv.cells({n, f, g, classical_benchmark(n)}).end();
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("fidelity-sweep", c);
  const auto fidelity = [&](double n) {
    return c.gain ? average_fidelity(channel, *c.gain, n) : optimize_gain(channel, n).fidelity;
  };
  const double hi = *std::max_element(c.nbar_grid.begin(), c.nbar_grid.end());
  const auto crossing = hi > 0.0 ? benchmark_crossing(fidelity, 0.0, hi) : std::nullopt;
  out.summary["results"] = {{"gain_mode", c.gain ? "fixed" : "optimal"},
                            {"benchmark_crossing", crossing ? Json(*crossing) : Json(nullptr)}};
  return out;
}

CommandOutput cmd_gain_opt(const ExperimentConfig& c) {
  const TeleportChannel channel = teleport_channel(c.params());
  Csv csv{"nbar", "g_opt", "F_opt", "at_boundary"};
  auto rows = Json::array();
  for (double n : c.nbar_grid) {
    const auto opt = optimize_gain(channel, n);
    csv.cells({n, opt.gain, opt.fidelity}).cell(opt.at_boundary).end();
    rows.push_back({{"nbar", n}, {"g_opt", opt.gain}, {"F_opt", opt.fidelity}});
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("gain-opt", c);
  out.summary["results"] = rows;
  return out;
}

CommandOutput cmd_qnd_opt(const ExperimentConfig& c) {
  const PhysicalParams p = c.params();
  const double gsT = p.gamma_s * c.teleport_T;
  Csv csv{"nbar", "exponent_B", "exponent_A", "g_opt", "F_opt", "F_flat"};
  auto rows = Json::array();
  for (double n : c.nbar_grid) {
    const auto opt = optimize_qnd_pulses(p.Z, gsT, n);
    csv.cells({n, opt.shape.exponent_B, opt.shape.exponent_A, opt.gain, opt.fidelity,
               opt.flat_fidelity})
        .end();
    rows.push_back({{"nbar", n}, {"F_opt", opt.fidelity}, {"F_flat", opt.flat_fidelity}});
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("qnd-opt", c);
  out.summary["derived"]["coupling_kappa"] = p.Z * std::sqrt(gsT);
  out.summary["derived"]["model"] = "lossless QND limit; gamma_extra, m and efficiencies unused";
  out.summary["results"] = rows;
  return out;
}

Json stats_json(const RunStatistics& s) {
  return {{"n_runs", s.n_runs}, {"mean_x", s.mean.x}, {"mean_p", s.mean.p},
          {"var_x", s.var_x},   {"var_p", s.var_p},   {"stderr_var", s.stderr_var}};
}

CommandOutput cmd_mc_run(const ExperimentConfig& c) {
  require_runs(c, 2);
  const PhysicalParams p = c.params();
  const TeleportChannel channel = teleport_channel(p);
  const double g = resolve_gain(c, channel);
  const auto run = run_teleportation(p, g, c.input, c.n_runs, mc_options(c));
  Csv csv{"run", "input_x", "input_p", "bell_c", "bell_s", "tele_x",
          "tele_p", "verified_x", "verified_p"};
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const auto& r = run.records[i];
    csv.cell(i)
        .cells({r.input_sample.x, r.input_sample.p, r.bell_outcome.x, r.bell_outcome.p,
                r.teleported.x, r.teleported.p, r.verified.x, r.verified.p})
        .end();
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("mc-run", c);
  out.summary["results"] = {{"gain", g},
                            {"transfer", g * channel.kappa},
                            {"analytic_var", channel.variance(g)},
                            {"teleported", stats_json(run.stats)}};
  return out;
}

CommandOutput cmd_variance_vs_gain(const ExperimentConfig& c) {
  if (c.n_runs == 1) throw ConfigError("n_runs", "must be 0 (analytic) or >= 2");
  const PhysicalParams p = c.params();
  const auto curve = variance_vs_gain(p, c.gains_grid, c.inputs, c.n_runs, mc_options(c));
  Csv csv{"gain", "input_x", "input_p", "var_x", "var_p", "stderr_var", "var_analytic"};
  for (const auto& pt : curve.points)
    csv.cells({pt.gain, pt.input_mean.x, pt.input_mean.p, pt.stats.var_x, pt.stats.var_p,
               pt.stats.stderr_var, pt.analytic_var})
        .end();
  const TeleportChannel channel = teleport_channel(p);
  // Exact quadratic coefficients of the analytic curve.
  const double v0 = channel.variance(0.0), v1 = channel.variance(1.0), vm = channel.variance(-1.0);
  const double a2 = 0.5 * (v1 + vm) - v0, a1 = 0.5 * (v1 - vm);
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("variance-vs-gain", c);
  out.summary["results"] = {{"mode", c.n_runs == 0 ? "analytic" : "monte-carlo"},
                            {"fit", {{"c0", curve.c0}, {"c1", curve.c1}, {"c2", curve.c2}}},
                            {"max_fit_residual", curve.max_fit_residual},
                            {"fitted_argmin", curve.fitted_argmin()},
                            {"analytic_argmin", -a1 / (2.0 * a2)},
                            {"max_input_spread_sigma", curve.max_input_spread_sigma}};
  return out;
}

CommandOutput cmd_sequence(const ExperimentConfig& c) {
  const PhysicalParams p = c.params();
  const double g = c.gain ? *c.gain : gain_for_transfer(p, c.transfer);
  SequenceOptions o;
  o.mc = mc_options(c);
  o.window = c.window;
  const auto waveform = illustrative_waveform(c.n_cycles, c.cycle_rate, c.amplitude);
  const auto trace = run_sequence(p, g, waveform, c.cycle_rate, o);
  Csv csv{"t",          "applied_x",  "applied_p",   "input_x",     "input_p",   "tele_x",
          "tele_p",     "avg_input_x", "avg_input_p", "avg_tele_x", "avg_tele_p"};
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < trace.timestamps.size(); ++i) {
    const auto& a = trace.applied_waveform[i];
    const auto& in = trace.verified_input[i];
    const auto& te = trace.verified_teleported[i];
    const auto& ai = trace.running_input[i];
    const auto& at = trace.running_teleported[i];
    csv.cells({trace.timestamps[i], a.x, a.p, in.x, in.p, te.x, te.p, ai.x, ai.p, at.x, at.p}).end();
    // Weighting by the applied waveform keeps readout noise in the input out
    // of the denominator.
    sxy += a.x * te.x + a.p * te.p;
    sxx += a.x * in.x + a.p * in.p;
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("sequence", c);
  out.summary["results"] = {{"gain", g},
                            {"transfer", trace.transfer},
                            {"duration_s", static_cast<double>(c.n_cycles) / c.cycle_rate},
                            {"fitted_ratio", sxx != 0.0 ? sxy / sxx : 0.0},
                            {"waveform", "illustrative"}};
  return out;
}

struct Check {
  std::string name;
  double value, reference, tolerance;
  bool pass() const { return std::abs(value - reference) <= tolerance; }
};

CommandOutput cmd_selfcheck(const ExperimentConfig& c) {
  const PhysicalParams p = c.params();
  std::vector<Check> checks;

  const auto env = mode_envelopes(p.with_duration(c.readout_T));
  for (const auto* e : {&env.f_y, &env.f_q, &env.f_N})
    checks.push_back({"readout_norm_" + e->label, e->normalization,
                      e->normalization_by_quadrature(), 1e-9 * std::abs(e->normalization)});

  const TeleportChannel channel = teleport_channel(p);
  const auto opt = optimize_gain(channel, 1.0);
  for (const auto* e : {&channel.f_NB, &channel.f_NA, &channel.f_y, &channel.f_q}) {
    const double n = e->normalization(opt.gain);
    checks.push_back({"teleport_norm_" + e->label, n, e->normalization_by_quadrature(opt.gain),
                      1e-9 * std::max(std::abs(n), 1e-12)});
  }

  const double var = channel.variance(opt.gain);
  const double transfer = opt.gain * channel.kappa;
  for (double n : {0.0, 1.0, 5.0})
    checks.push_back({"fidelity_quadrature_nbar" + format_number(n),
                      average_fidelity(var, transfer, n),
                      average_fidelity_by_quadrature(var, transfer, n), 1e-6});

  const std::size_t runs = std::max<std::size_t>(c.n_runs, 20000);
  McOptions mo = mc_options(c);
  mo.keep_records = false;
  const auto mc = run_teleportation(p, opt.gain, c.input, runs, mo);
  checks.push_back({"mc_var_x", mc.stats.var_x, var, 4.0 * mc.stats.stderr_var});
  checks.push_back({"mc_var_p", mc.stats.var_p, var, 4.0 * mc.stats.stderr_var});
  checks.push_back({"mc_mean_x", mc.stats.mean.x, transfer * c.input.x,
                    4.0 * std::sqrt(var / static_cast<double>(runs))});

  const auto model = ReadoutModel::for_ensemble_B(p, c.readout_T);
  const auto vac = verify_ensemble(model, {0.0, 0.0}, 0.5, runs, c.seed);
  const double light_var = model.eta * (0.5 * model.coeffs.kappa * model.coeffs.kappa +
                                        readout_noise_variance(model.coeffs, model.m)) +
                           0.5 * (1.0 - model.eta);
  const double vac_se = light_var * std::sqrt(2.0 / (runs - 1.0)) /
                        (model.eta * model.coeffs.kappa * model.coeffs.kappa);
  checks.push_back({"vacuum_var_x", vac.var_x, 0.5, 4.0 * vac_se});
  checks.push_back({"vacuum_var_p", vac.var_p, 0.5, 4.0 * vac_se});

  const double K = p.Z * std::sqrt(p.gamma_s * c.teleport_T);
  const QndGram flat = qnd_channel(K, {});
  const auto qnd = qnd_coefficients(p.Z, p.gamma_s * c.teleport_T);
  checks.push_back({"qnd_flat_closed_form", flat.variance(0.9), qnd_flat_variance(qnd, 0.9), 1e-9});
  const PulseShape shaped{-1.2, 0.3};
  checks.push_back({"qnd_sliced_oracle", qnd_channel(K, shaped).variance(0.9),
                    qnd_channel_sliced(K, shaped).variance(0.9), 1e-6});

  Csv csv{"check", "value", "reference", "tolerance", "pass"};
  auto rows = Json::array();
  bool all = true;
  for (const auto& ch : checks) {
    csv.cell(ch.name).cells({ch.value, ch.reference, ch.tolerance}).cell(ch.pass()).end();
    rows.push_back({{"check", ch.name}, {"value", ch.value}, {"reference", ch.reference},
                    {"tolerance", ch.tolerance}, {"pass", ch.pass()}});
    all = all && ch.pass();
  }
  CommandOutput out;
  out.csv = csv.str();
  out.summary = base_summary("selfcheck", c);
  out.summary["results"] = {{"all_pass", all}, {"checks", rows}};
  out.exit_code = all ? 0 : 1;
  return out;
}

const std::map<std::string, std::function<CommandOutput(const ExperimentConfig&)>>& table() {
  static const std::map<std::string, std::function<CommandOutput(const ExperimentConfig&)>> t{
      {"coeffs", cmd_coeffs},
      {"teleport", cmd_teleport},
      {"fidelity-sweep", cmd_fidelity_sweep},
      {"gain-opt", cmd_gain_opt},
      {"qnd-opt", cmd_qnd_opt},
      {"mc-run", cmd_mc_run},
      {"variance-vs-gain", cmd_variance_vs_gain},
      {"sequence", cmd_sequence},
      {"selfcheck", cmd_selfcheck},
  };
  return t;
}

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"coeffs",   "teleport",         "fidelity-sweep",
                                              "gain-opt", "qnd-opt",          "mc-run",
                                              "variance-vs-gain", "sequence", "selfcheck"};
  return names;
}

CommandOutput run_command(const std::string& name, const ExperimentConfig& config) {
  const auto it = table().find(name);
  if (it == table().end()) throw UsageError("unknown command '" + name + "'");
  config.validate();
  return it->second(config);
}

int execute(const std::string& name, const ExperimentConfig& config, std::ostream& log) {
  CommandOutput out;
  try {
    out = run_command(name, config);
  } catch (const UsageError& e) {
    log << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec) {
    log << "error: cannot create '" << config.output_dir << "': " << ec.message() << "\n";
    return 1;
  }
  const fs::path base = fs::path(config.output_dir) / name;
  const auto write = [&](const fs::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    f << body;
    if (!f) {
      log << "error: cannot write '" << path.string() << "'\n";
      return false;
    }
    log << "wrote " << path.string() << "\n";
    return true;
  };
  if (config.format != OutputFormat::json && !write(fs::path(base).concat(".csv"), out.csv)) return 1;
  if (config.format != OutputFormat::csv &&
      !write(fs::path(base).concat(".json"), out.summary.dump(2) + "\n"))
    return 1;
  if (out.exit_code != 0) log << name << ": one or more checks failed\n";
  return out.exit_code;
}

}  // namespace cvtele::app
