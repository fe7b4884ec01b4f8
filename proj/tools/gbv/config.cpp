#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace gbvcli {

namespace {

// Every key the pipeline understands; anything else is a schema violation.
const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "experiment", "seed", "out", "threads",
      // model
      "model.kind", "model.family", "model.sigma2", "model.power", "model.gamma",
      "model.isotropic", "model.cdf", "model.n",
      // data
      "data.source", "data.path", "data.n", "data.theta_true", "data.covariates", "data.sigma",
      "data.kind", "data.baseline", "data.censor", "data.noise", "data.L", "data.m",
      "data.sweeps", "data.burn_sweeps", "data.theta_axes", "data.s_n", "data.a_upper", "data.b",
      // prior
      "prior.kind", "prior.lower", "prior.upper", "prior.mean", "prior.sd",
      // optimizer / init
      "init", "optimizer.tol", "optimizer.max_iter",
      // sampler
      "sampler.steps", "sampler.burn_in", "sampler.chains",
      // grid
      "grid.lower", "grid.upper", "grid.resolution",
      // diagnostics
      "diagnostics.tv", "diagnostics.n_list", "diagnostics.concentration_center",
      "diagnostics.concentration_eps", "diagnostics.audit", "diagnostics.audit_halfwidth",
      "diagnostics.sandwich", "diagnostics.moment_gap",
      // coverage
      "coverage.enabled", "coverage.family", "coverage.theta0", "coverage.sigma", "coverage.n",
      "coverage.rho", "coverage.reps", "coverage.calibrate",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string piece;
  while (std::getline(ss, piece, ',')) out.push_back(trim(piece));
  return out;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str(), path);
}

Config Config::parse_text(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    if (!known_keys().count(key))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (cfg.entries_.count(key))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    cfg.entries_[key] = Entry{value, line_no};
  }
  return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void Config::fail(const std::string& key, const std::string& why) const {
  const Entry* e = find(key);
  const std::string where =
      e ? origin_ + ":" + std::to_string(e->line) + ": " : origin_ + ": ";
  throw ConfigError(where + "key '" + key + "' " + why);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

std::string Config::require_string(const std::string& key) const {
  const Entry* e = find(key);
  if (!e) throw ConfigError(origin_ + ": missing required key '" + key + "'");
  return e->value;
}

double Config::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t used = 0;
    const double v = std::stod(e->value, &used);
    if (used != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "must be a number, got '" + e->value + "'");
  }
}

long Config::get_long(const std::string& key, long fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t used = 0;
    const long v = std::stol(e->value, &used);
    if (used != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "must be an integer, got '" + e->value + "'");
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    size_t used = 0;
    const std::uint64_t v = std::stoull(e->value, &used);
    if (used != e->value.size()) throw std::invalid_argument(e->value);
    return v;
  } catch (const std::exception&) {
    fail(key, "must be an unsigned integer, got '" + e->value + "'");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(key, "must be true/false, got '" + e->value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key,
                                        const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& piece : split_commas(e->value)) {
    try {
      size_t used = 0;
      out.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      fail(key, "must be a comma-separated number list, got '" + e->value + "'");
    }
  }
  if (out.empty()) fail(key, "must be a nonempty number list");
  return out;
}

std::vector<long> Config::get_longs(const std::string& key,
                                    const std::vector<long>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<long> out;
  for (const auto& piece : split_commas(e->value)) {
    try {
      size_t used = 0;
      out.push_back(std::stol(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      fail(key, "must be a comma-separated integer list, got '" + e->value + "'");
    }
  }
  if (out.empty()) fail(key, "must be a nonempty integer list");
  return out;
}

std::string Config::canonical_text() const {
  std::string out;
  for (const auto& [key, entry] : entries_) out += key + " = " + entry.value + "\n";
  return out;
}

std::string Config::hash_hex() const {
  // FNV-1a 64
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : canonical_text()) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void Config::expect_one_of(const std::string& key, const std::vector<std::string>& allowed) const {
  const Entry* e = find(key);
  if (!e) return;
  if (std::find(allowed.begin(), allowed.end(), e->value) == allowed.end()) {
    std::string options;
    for (const auto& a : allowed) options += (options.empty() ? "" : "|") + a;
    fail(key, "must be one of " + options + ", got '" + e->value + "'");
  }
}

}  // namespace gbvcli
