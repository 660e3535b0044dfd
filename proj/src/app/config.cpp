#include "cvtele/app/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cvtele::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& field, const std::string& raw) {
  const std::string text = trim(raw);
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(field, "expected a finite number, got '" + text + "'");
  return v;
}

std::uint64_t parse_count(const std::string& field, const std::string& raw) {
  const std::string text = trim(raw);
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<QuadraturePair> parse_pairs(const std::string& field, const std::string& text) {
  std::vector<QuadraturePair> out;
  for (const auto& item : split(text, ';')) {
    if (item.empty()) continue;
    std::istringstream in(item);
    std::string xs, ps, extra;
    if (!(in >> xs >> ps) || (in >> extra))
      throw ConfigError(field, "expected 'x p' pairs separated by ';', got '" + item + "'");
    out.push_back({parse_number(field, xs), parse_number(field, ps)});
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out;
}

std::string pairs_text(const std::vector<QuadraturePair>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "; " : "") + num(v[i].x) + " " + num(v[i].p);
  return out;
}

}  // namespace

std::vector<double> parse_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) throw ConfigError(field, "empty list element");
    const auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(parse_number(field, parts[0]));
    } else if (parts.size() == 3) {
      const double a = parse_number(field, parts[0]);
      const double step = parse_number(field, parts[1]);
      const double b = parse_number(field, parts[2]);
      if (!(step > 0.0) || b < a) throw ConfigError(field, "range a:step:b needs step > 0, b >= a");
      const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
      if (n > 1000000) throw ConfigError(field, "range has too many points");
      for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    } else {
      throw ConfigError(field, "bad list element '" + item + "'");
    }
  }
  return out;
}

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  if (text == "both") return OutputFormat::both;
  throw ConfigError("format", "expected csv, json or both, got '" + text + "'");
}

std::string format_name(OutputFormat format) {
  switch (format) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::both: return "both";
  }
  return "both";
}

void set_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto number = [&] { return parse_number(key, value); };
  const auto count = [&] { return parse_count(key, value); };
  if (key == "gamma") c.gamma = number();
  else if (key == "gamma_s") c.gamma_s = number();
  else if (key == "gamma_extra") c.gamma_extra = number();
  else if (key == "Z") { const double z = number(); c.Z2 = z * z; }
  else if (key == "Z2") c.Z2 = number();
  else if (key == "m") c.m = number();
  else if (key == "eta_A") c.eta_A = number();
  else if (key == "eta_B") c.eta_B = number();
  else if (key == "omega_larmor") c.omega_larmor = number();
  else if (key == "teleport_T") c.teleport_T = number();
  else if (key == "readout_T") c.readout_T = number();
  else if (key == "gain") {
    if (trim(value) == "optimal") c.gain.reset();
    else c.gain = number();
  }
  else if (key == "nbar_grid") c.nbar_grid = parse_list(key, value);
  else if (key == "gains_grid") c.gains_grid = parse_list(key, value);
  else if (key == "inputs") c.inputs = parse_pairs(key, value);
  else if (key == "input") {
    const auto p = parse_pairs(key, value);
    if (p.size() != 1) throw ConfigError(key, "expected a single 'x p' pair");
    c.input = p.front();
  }
  else if (key == "n_runs") c.n_runs = count();
  else if (key == "seed") c.seed = count();
  else if (key == "workers") c.workers = static_cast<unsigned>(count());
  else if (key == "cycle_rate") c.cycle_rate = number();
  else if (key == "n_cycles") c.n_cycles = count();
  else if (key == "window") c.window = count();
  else if (key == "transfer") c.transfer = number();
  else if (key == "amplitude") c.amplitude = number();
  else if (key == "output_dir") c.output_dir = trim(value);
  else if (key == "format") c.format = parse_format(trim(value));
  else throw ConfigError(key, "unknown key");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    // Z and Z2 are two spellings of one setting.
    const std::string canonical = key == "Z" ? "Z2" : key;
    if (!seen.insert(canonical).second) throw ConfigError(key, "given more than once");
    set_key(c, key, line.substr(eq + 1));
  }
  if (c.gamma && c.gamma_s) throw ConfigError("gamma", "supply exactly one of gamma and gamma_s");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("config", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_config(buf.str());
}

PhysicalParams ExperimentConfig::params() const {
  PhysicalParams p;
  p.gamma_extra = gamma_extra;
  p.gamma_s = gamma_s ? *gamma_s : gamma.value_or(99.3) - gamma_extra;
  p.Z = std::sqrt(Z2);
  p.T = teleport_T;
  p.m = m;
  p.eta_A = eta_A;
  p.eta_B = eta_B;
  p.omega_larmor = omega_larmor;
  return p;
}

void ExperimentConfig::validate() const {
  const auto require = [](bool ok, const char* field, const char* message) {
    if (!ok) throw ConfigError(field, message);
  };
  if (gamma && gamma_s) throw ConfigError("gamma", "supply exactly one of gamma and gamma_s");
  const PhysicalParams p = params();
  require(gamma_extra >= 0.0, "gamma_extra", "must be >= 0");
  require(p.gamma_s > 0.0, gamma_s ? "gamma_s" : "gamma", "gamma_s = gamma - gamma_extra must be > 0");
  require(Z2 > 1.0, "Z2", "must be > 1");
  require(m >= 1.0, "m", "must be >= 1");
  require(eta_A > 0.0 && eta_A <= 1.0, "eta_A", "must lie in (0, 1]");
  require(eta_B > 0.0 && eta_B <= 1.0, "eta_B", "must lie in (0, 1]");
  require(teleport_T > 0.0, "teleport_T", "must be > 0");
  require(readout_T > 0.0, "readout_T", "must be > 0");
  require(nbar_grid.size() > 0, "nbar_grid", "must not be empty");
  for (double n : nbar_grid) require(n >= 0.0, "nbar_grid", "entries must be >= 0");
  require(gains_grid.size() > 0, "gains_grid", "must not be empty");
  require(!inputs.empty(), "inputs", "must not be empty");
  require(cycle_rate > 0.0, "cycle_rate", "must be > 0");
  require(n_cycles > 0, "n_cycles", "must be > 0");
  require(window > 0, "window", "must be > 0");
  require(transfer > 0.0, "transfer", "must be > 0");
  require(!output_dir.empty(), "output_dir", "must not be empty");
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  if (c.gamma_s) j["gamma_s"] = *c.gamma_s;
  else j["gamma"] = c.gamma.value_or(99.3);
  j["gamma_extra"] = c.gamma_extra;
  j["Z2"] = c.Z2;
  j["m"] = c.m;
  j["eta_A"] = c.eta_A;
  j["eta_B"] = c.eta_B;
  j["omega_larmor"] = c.omega_larmor;
  j["teleport_T"] = c.teleport_T;
  j["readout_T"] = c.readout_T;
  if (c.gain) j["gain"] = *c.gain;
  else j["gain"] = "optimal";
  j["nbar_grid"] = c.nbar_grid;
  j["gains_grid"] = c.gains_grid;
  auto inputs = nlohmann::ordered_json::array();
  for (const auto& q : c.inputs) inputs.push_back({q.x, q.p});
  j["inputs"] = inputs;
  j["input"] = {c.input.x, c.input.p};
  j["n_runs"] = c.n_runs;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["cycle_rate"] = c.cycle_rate;
  j["n_cycles"] = c.n_cycles;
  j["window"] = c.window;
  j["transfer"] = c.transfer;
  j["amplitude"] = c.amplitude;
  j["output_dir"] = c.output_dir;
  j["format"] = format_name(c.format);
  return j;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  if (c.gamma_s) out << "gamma_s = " << num(*c.gamma_s) << "\n";
  else out << "gamma = " << num(c.gamma.value_or(99.3)) << "\n";
  out << "gamma_extra = " << num(c.gamma_extra) << "\n"
      << "Z2 = " << num(c.Z2) << "\n"
      << "m = " << num(c.m) << "\n"
      << "eta_A = " << num(c.eta_A) << "\n"
      << "eta_B = " << num(c.eta_B) << "\n"
      << "omega_larmor = " << num(c.omega_larmor) << "\n"
      << "teleport_T = " << num(c.teleport_T) << "\n"
      << "readout_T = " << num(c.readout_T) << "\n"
      << "gain = " << (c.gain ? num(*c.gain) : std::string("optimal")) << "\n"
      << "nbar_grid = " << list_text(c.nbar_grid) << "\n"
      << "gains_grid = " << list_text(c.gains_grid) << "\n"
      << "inputs = " << pairs_text(c.inputs) << "\n"
      << "input = " << pairs_text({c.input}) << "\n"
      << "n_runs = " << c.n_runs << "\n"
      << "seed = " << c.seed << "\n"
      << "workers = " << c.workers << "\n"
      << "cycle_rate = " << num(c.cycle_rate) << "\n"
      << "n_cycles = " << c.n_cycles << "\n"
      << "window = " << c.window << "\n"
      << "transfer = " << num(c.transfer) << "\n"
      << "amplitude = " << num(c.amplitude) << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "format = " << format_name(c.format) << "\n";
  return out.str();
}

}  // namespace cvtele::app
