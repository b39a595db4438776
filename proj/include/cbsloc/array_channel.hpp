#pragma once

#include <cmath>
#include <vector>

#include "cbsloc/types.hpp"

namespace cbsloc {

/// Uniform linear array + OFDM grid. Indices (antenna n, subcarrier m) are
/// 1-based throughout the public API.
struct SystemConfig {
  int n_antennas = 512;
  double carrier_hz = 100e9;
  double bandwidth_hz = 6e9;
  int n_subcarriers = 2048;
  double spacing_m = kLightspeed / 100e9 / 2;
  double lightspeed_mps = kLightspeed;

  /// Half-wavelength spacing at the carrier.
  static SystemConfig make(int n_antennas, double carrier_hz, double bandwidth_hz,
                           int n_subcarriers, double lightspeed_mps = kLightspeed);

  void validate() const;
  double wavelength() const { return lightspeed_mps / carrier_hz; }
  double subcarrier_spacing_hz() const { return bandwidth_hz / n_subcarriers; }
  double aperture_m() const { return n_antennas * spacing_m; }
  /// f_M - f_1, the bandwidth actually spanned by the subcarrier grid.
  double spanned_bandwidth_hz() const;
};

/// Sub-array visibility set; `visible` holds 1-based sub-array indices.
struct VisibilityRegion {
  int n_subarrays = 1;
  std::vector<int> visible{1};

  static VisibilityRegion stationary(int n_subarrays = 1);
  void validate() const;
  void validate_for(const SystemConfig& cfg) const;
  bool is_stationary() const;
};

struct ChannelVector {
  CVector entries;
  int subcarrier_index = 1;
};

double subcarrier_frequency(const SystemConfig& cfg, int m);
/// All M subcarrier frequencies, f_1 first.
RVector subcarrier_frequencies(const SystemConfig& cfg);

/// Symmetric centered index (2n - N - 1) / 2.
double centered_antenna_index(const SystemConfig& cfg, int n);
RVector centered_antenna_indices(const SystemConfig& cfg);

template <typename Scalar>
Scalar exact_distance(Scalar range, Scalar angle, Scalar offset_m) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar x = range * cos(angle);
  const Scalar y = range * sin(angle) - offset_m;
  return sqrt(x * x + y * y);
}

/// Second-order expansion of exact_distance around offset 0.
template <typename Scalar>
Scalar taylor_distance(Scalar range, Scalar angle, Scalar offset_m) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(angle);
  return range - offset_m * sin(angle) + offset_m * offset_m * c * c / (Scalar(2) * range);
}

double exact_distance(const SystemConfig& cfg, const PolarPosition& pos, int n);
double taylor_distance(const SystemConfig& cfg, const PolarPosition& pos, int n);
/// taylor_distance for every antenna.
RVector antenna_distances(const SystemConfig& cfg, const PolarPosition& pos);

double path_gain(const SystemConfig& cfg, double range_m, int m);

/// Near-field response at an arbitrary frequency.
template <typename Scalar>
CVec<Scalar> array_response_at(const SystemConfig& cfg, const PolarPosition& pos,
                               Scalar freq_hz) {
  const int n_ant = cfg.n_antennas;
  const Scalar inv_sqrt_n = Scalar(1) / std::sqrt(Scalar(n_ant));
  const Scalar half = Scalar(n_ant + 1) / Scalar(2);
  CVec<Scalar> a(n_ant);
  for (int n = 1; n <= n_ant; ++n) {
    const Scalar offset = (Scalar(n) - half) * Scalar(cfg.spacing_m);
    const Scalar dist =
        taylor_distance<Scalar>(Scalar(pos.range_m), Scalar(pos.angle_rad), offset);
    // cycles reduced before scaling by 2*pi keeps the phase exact to ~1e-12 rad
    const Scalar cycles = std::remainder(freq_hz * dist / Scalar(cfg.lightspeed_mps), Scalar(1));
    a[n - 1] = std::polar(inv_sqrt_n, Scalar(-2) * Scalar(std::numbers::pi) * cycles);
  }
  return a;
}

CVector array_response(const SystemConfig& cfg, const PolarPosition& pos, int m);

RVector vr_mask(const SystemConfig& cfg, const VisibilityRegion& vr);

/// h = sqrt(N) * beta * a (.) b
ChannelVector channel(const SystemConfig& cfg, const PolarPosition& pos,
                      const VisibilityRegion& vr, int m);

}  // namespace cbsloc
