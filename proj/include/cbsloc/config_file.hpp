#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cbsloc/localization.hpp"

namespace cbsloc {

/// `key = value` lines; `#` starts a comment. Unknown keys are rejected by the
/// typed loaders below so typos do not pass silently.
///
///   n_antennas, carrier_hz, bandwidth_hz, n_subcarriers, spacing_m, lightspeed_mps
///   n_subarrays, visible            (visible is a comma list, e.g. 1,2)
///   r_min_m, r_max_m, theta_min_deg, theta_max_deg
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& is, const std::string& origin = "<stream>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

struct ScenarioConfig {
  SystemConfig system;
  VisibilityRegion visibility;
  SearchRegion region;
};

/// Starts from the defaults and overrides whatever keys are present.
ScenarioConfig scenario_from(const KeyValueConfig& kv);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace cbsloc
