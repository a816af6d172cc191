#include "qchns/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "qchns/errors.hpp"

namespace qchns {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ConfigError("config: key '" + key + "' must be an integer");
  return static_cast<int>(x);
}

InitSpec parse_init(const std::string& v) {
  InitSpec spec;
  const auto colon = v.find(':');
  const std::string kind = (colon == std::string::npos) ? v : v.substr(0, colon);
  const std::string args = (colon == std::string::npos) ? "" : v.substr(colon + 1);
  std::vector<std::string> parts;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) parts.push_back(trim(tok));

  if (kind == "uniform") {
    spec.kind = InitKind::Uniform;
    if (parts.size() != 1) throw ConfigError("config: init uniform wants 'uniform:<value>'");
    spec.value = to_double("init", parts[0]);
  } else if (kind == "sinusoidal") {
    spec.kind = InitKind::Sinusoidal;
    if (parts.size() != 3)
      throw ConfigError("config: init sinusoidal wants 'sinusoidal:<amp>,<kx>,<ky>'");
    spec.amp = to_double("init", parts[0]);
    spec.kx = to_int("init", parts[1]);
    spec.ky = to_int("init", parts[2]);
  } else if (kind == "spinodal") {
    spec.kind = InitKind::Spinodal;
    if (parts.size() != 2)
      throw ConfigError("config: init spinodal wants 'spinodal:<amp>,<seed>'");
    spec.amp = to_double("init", parts[0]);
    spec.seed = static_cast<uint64_t>(to_double("init", parts[1]));
  } else if (kind == "file") {
    spec.kind = InitKind::File;
    if (args.empty()) throw ConfigError("config: init file wants 'file:<path>'");
    spec.path = trim(args);
  } else {
    throw ConfigError("config: unknown init kind '" + kind + "'");
  }
  return spec;
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  static const std::array<const char*, 11> required = {
      "nx", "ny", "Lx", "Ly", "eps", "nu", "a0", "dt", "T", "init", "output_dir"};
  static const std::array<const char*, 4> optional = {"gravity_on", "picard_tol",
                                                      "picard_max_iters", "snapshot_interval"};

  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw ConfigError("config: unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError("config: duplicate key '" + key + "'");
    kv[key] = val;
  }

  for (const char* key : required)
    if (!kv.count(key)) throw ConfigError(std::string("config: missing required key '") + key + "'");

  SimConfig c;
  c.nx = to_int("nx", kv["nx"]);
  c.ny = to_int("ny", kv["ny"]);
  c.Lx = to_double("Lx", kv["Lx"]);
  c.Ly = to_double("Ly", kv["Ly"]);
  c.eps = to_double("eps", kv["eps"]);
  c.nu = to_double("nu", kv["nu"]);
  c.a0 = to_double("a0", kv["a0"]);
  c.dt = to_double("dt", kv["dt"]);
  c.T = to_double("T", kv["T"]);
  c.init = parse_init(kv["init"]);
  c.output_dir = kv["output_dir"];
  if (kv.count("gravity_on")) c.gravity_on = to_int("gravity_on", kv["gravity_on"]) != 0;
  if (kv.count("picard_tol")) c.picard_tol = to_double("picard_tol", kv["picard_tol"]);
  if (kv.count("picard_max_iters"))
    c.picard_max_iters = to_int("picard_max_iters", kv["picard_max_iters"]);
  if (kv.count("snapshot_interval"))
    c.snapshot_interval = to_int("snapshot_interval", kv["snapshot_interval"]);

  if (c.nx < 8 || c.ny < 8) throw ConfigError("config: nx, ny must be >= 8");
  if (!(c.Lx > 0.0 && c.Ly > 0.0)) throw ConfigError("config: Lx, Ly must be positive");
  if (!(c.eps > -0.95 && c.eps < -0.05))
    throw ConfigError("config: eps must lie in (-0.95, -0.05)");
  const double alpha = alpha_from_eps(c.eps);
  if (alpha < 0.05 - 1e-12)
    throw ConfigError("config: alpha = -eps/(2+eps) below the 0.05 runtime guard");
  if (!(c.nu >= 0.2 && c.nu <= 5.0)) throw ConfigError("config: nu must lie in [0.2, 5]");
  if (!(c.a0 > 0.0)) throw ConfigError("config: a0 must be positive");
  if (!(c.dt > 0.0)) throw ConfigError("config: dt must be positive");
  if (!(c.T >= 0.0)) throw ConfigError("config: T must be nonnegative");
  if (!(c.picard_tol > 0.0)) throw ConfigError("config: picard_tol must be positive");
  if (c.picard_max_iters < 2) throw ConfigError("config: picard_max_iters must be >= 2");
  if (c.snapshot_interval < 0) throw ConfigError("config: snapshot_interval must be >= 0");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir must be nonempty");
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace qchns
