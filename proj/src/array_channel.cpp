#include "cbsloc/array_channel.hpp"

#include <algorithm>
#include <sstream>

namespace cbsloc {

void PolarPosition::validate() const {
  if (!(range_m > 0.0) || !std::isfinite(range_m)) {
    throw ConfigError("position range must be positive and finite");
  }
  if (!(std::abs(angle_rad) < kPi / 2)) {
    throw ConfigError("position angle must lie strictly inside (-pi/2, pi/2)");
  }
}

double PolarPosition::x() const { return range_m * std::cos(angle_rad); }
double PolarPosition::y() const { return range_m * std::sin(angle_rad); }

Rng make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

SystemConfig SystemConfig::make(int n_antennas, double carrier_hz, double bandwidth_hz,
                                int n_subcarriers, double lightspeed_mps) {
  SystemConfig cfg;
  cfg.n_antennas = n_antennas;
  cfg.carrier_hz = carrier_hz;
  cfg.bandwidth_hz = bandwidth_hz;
  cfg.n_subcarriers = n_subcarriers;
  cfg.lightspeed_mps = lightspeed_mps;
  cfg.spacing_m = lightspeed_mps / carrier_hz / 2;
  cfg.validate();
  return cfg;
}

void SystemConfig::validate() const {
  if (n_antennas < 2) throw ConfigError("n_antennas must be >= 2");
  if (n_subcarriers < 1) throw ConfigError("n_subcarriers must be >= 1");
  if (!(carrier_hz > 0.0)) throw ConfigError("carrier_hz must be positive");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth_hz must be positive");
  if (!(bandwidth_hz < carrier_hz)) throw ConfigError("bandwidth_hz must be below carrier_hz");
  if (!(spacing_m > 0.0)) throw ConfigError("spacing_m must be positive");
  if (!(lightspeed_mps > 0.0)) throw ConfigError("lightspeed_mps must be positive");
}

double SystemConfig::spanned_bandwidth_hz() const {
  return subcarrier_spacing_hz() * (n_subcarriers - 1);
}

VisibilityRegion VisibilityRegion::stationary(int n_subarrays) {
  VisibilityRegion vr;
  vr.n_subarrays = n_subarrays;
  vr.visible.resize(n_subarrays);
  for (int i = 0; i < n_subarrays; ++i) vr.visible[i] = i + 1;
  return vr;
}

void VisibilityRegion::validate() const {
  if (n_subarrays < 1) throw ConfigError("n_subarrays must be >= 1");
  if (visible.empty()) throw ConfigError("visibility region must contain a sub-array");
  for (int idx : visible) {
    if (idx < 1 || idx > n_subarrays) {
      std::ostringstream os;
      os << "visible sub-array " << idx << " outside [1, " << n_subarrays << "]";
      throw ConfigError(os.str());
    }
  }
}

void VisibilityRegion::validate_for(const SystemConfig& cfg) const {
  validate();
  if (cfg.n_antennas % n_subarrays != 0) {
    throw ConfigError("n_antennas must be divisible by n_subarrays");
  }
}

bool VisibilityRegion::is_stationary() const {
  for (int i = 1; i <= n_subarrays; ++i) {
    if (std::find(visible.begin(), visible.end(), i) == visible.end()) return false;
  }
  return true;
}

double subcarrier_frequency(const SystemConfig& cfg, int m) {
  if (m < 1 || m > cfg.n_subcarriers) throw std::out_of_range("subcarrier index out of range");
  return cfg.carrier_hz +
         cfg.subcarrier_spacing_hz() * (m - 1 - (cfg.n_subcarriers - 1) / 2.0);
}

RVector subcarrier_frequencies(const SystemConfig& cfg) {
  RVector f(cfg.n_subcarriers);
  for (int m = 1; m <= cfg.n_subcarriers; ++m) f[m - 1] = subcarrier_frequency(cfg, m);
  return f;
}

double centered_antenna_index(const SystemConfig& cfg, int n) {
  if (n < 1 || n > cfg.n_antennas) throw std::out_of_range("antenna index out of range");
  return (2.0 * n - cfg.n_antennas - 1) / 2.0;
}

RVector centered_antenna_indices(const SystemConfig& cfg) {
  RVector idx(cfg.n_antennas);
  for (int n = 1; n <= cfg.n_antennas; ++n) idx[n - 1] = centered_antenna_index(cfg, n);
  return idx;
}

double exact_distance(const SystemConfig& cfg, const PolarPosition& pos, int n) {
  return exact_distance<double>(pos.range_m, pos.angle_rad,
                                centered_antenna_index(cfg, n) * cfg.spacing_m);
}

double taylor_distance(const SystemConfig& cfg, const PolarPosition& pos, int n) {
  return taylor_distance<double>(pos.range_m, pos.angle_rad,
                                 centered_antenna_index(cfg, n) * cfg.spacing_m);
}

RVector antenna_distances(const SystemConfig& cfg, const PolarPosition& pos) {
  RVector d(cfg.n_antennas);
  for (int n = 1; n <= cfg.n_antennas; ++n) d[n - 1] = taylor_distance(cfg, pos, n);
  return d;
}

double path_gain(const SystemConfig& cfg, double range_m, int m) {
  if (!(range_m > 0.0)) throw ConfigError("path_gain requires a positive range");
  return cfg.lightspeed_mps / (4.0 * kPi * subcarrier_frequency(cfg, m) * range_m);
}

CVector array_response(const SystemConfig& cfg, const PolarPosition& pos, int m) {
  return array_response_at<double>(cfg, pos, subcarrier_frequency(cfg, m));
}

RVector vr_mask(const SystemConfig& cfg, const VisibilityRegion& vr) {
  vr.validate_for(cfg);
  RVector b = RVector::Zero(cfg.n_antennas);
  const int per_sub = cfg.n_antennas / vr.n_subarrays;
  for (int n = 1; n <= cfg.n_antennas; ++n) {
    // ceil(n * Ns / N) with N / Ns integral
    const int sub = (n + per_sub - 1) / per_sub;
    if (std::find(vr.visible.begin(), vr.visible.end(), sub) != vr.visible.end()) b[n - 1] = 1.0;
  }
  return b;
}

ChannelVector channel(const SystemConfig& cfg, const PolarPosition& pos,
                      const VisibilityRegion& vr, int m) {
  const double scale = std::sqrt(double(cfg.n_antennas)) * path_gain(cfg, pos.range_m, m);
  ChannelVector h;
  h.subcarrier_index = m;
  h.entries = scale * array_response(cfg, pos, m).cwiseProduct(vr_mask(cfg, vr).cast<std::complex<double>>());
  return h;
}

}  // namespace cbsloc
