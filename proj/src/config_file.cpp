#include "cbsloc/config_file.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace cbsloc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "n_antennas", "carrier_hz",  "bandwidth_hz", "n_subcarriers", "spacing_m",
      "lightspeed_mps", "n_subarrays", "visible",   "r_min_m",       "r_max_m",
      "theta_min_deg", "theta_max_deg"};
  return keys;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& is, const std::string& origin) {
  KeyValueConfig kv;
  kv.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
    }
    if (!kv.values_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse(is, path);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": '" + key + "' is not a number: " + it->second);
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const int v = std::stoi(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": '" + key + "' is not an integer: " + it->second);
  }
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              std::vector<int> fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<int> out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": '" + key + "' has a bad list entry: " + item);
    }
  }
  return out;
}

ScenarioConfig scenario_from(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.values()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ScenarioConfig sc;
  SystemConfig& s = sc.system;
  s.n_antennas = kv.get_int("n_antennas", s.n_antennas);
  s.carrier_hz = kv.get_double("carrier_hz", s.carrier_hz);
  s.bandwidth_hz = kv.get_double("bandwidth_hz", s.bandwidth_hz);
  s.n_subcarriers = kv.get_int("n_subcarriers", s.n_subcarriers);
  s.lightspeed_mps = kv.get_double("lightspeed_mps", s.lightspeed_mps);
  s.spacing_m = kv.get_double("spacing_m", s.lightspeed_mps / s.carrier_hz / 2);
  s.validate();

  const int ns = kv.get_int("n_subarrays", 1);
  sc.visibility = kv.has("visible") ? VisibilityRegion{ns, kv.get_int_list("visible", {})}
                                    : VisibilityRegion::stationary(ns);
  sc.visibility.validate_for(s);

  SearchRegion& r = sc.region;
  r.r_min = kv.get_double("r_min_m", r.r_min);
  r.r_max = kv.get_double("r_max_m", r.r_max);
  r.theta_min = deg2rad(kv.get_double("theta_min_deg", rad2deg(r.theta_min)));
  r.theta_max = deg2rad(kv.get_double("theta_max_deg", rad2deg(r.theta_max)));
  r.validate();
  return sc;
}

ScenarioConfig load_scenario(const std::string& path) {
  return scenario_from(KeyValueConfig::load(path));
}

}  // namespace cbsloc
