#pragma once

#include <vector>

#include "cbsloc/array_channel.hpp"

namespace cbsloc {

/// Foci of the first (start) and last (end) subcarrier.
struct TrajectorySpec {
  PolarPosition start;
  PolarPosition end;
  void validate() const;
};

/// Denominator used for the TTD slope. kSpanned uses f_M - f_1 so the last
/// subcarrier lands exactly on the end focus; kNominal uses the nominal B.
enum class BandwidthConvention { kSpanned, kNominal };

/// Per-antenna phases (cycles) and delays (seconds). Subcarrier m sees
/// w_n = exp(-j2pi phi_n) exp(-j2pi (f_m - base) t_n) / sqrt(N).
struct TtdConfig {
  RVector phases;
  RVector delays;
  double base_freq_hz = 0.0;
};

/// A TtdConfig applied to the contiguous subcarrier range [first_m, last_m].
struct BeamSegment {
  int first_m = 1;
  int last_m = 1;
  TtdConfig ttd;
};

/// Covers every subcarrier exactly once, segments in increasing order.
struct BeamPlan {
  std::vector<BeamSegment> segments;

  static BeamPlan single(const SystemConfig& cfg, TtdConfig ttd);
  const BeamSegment& segment_for(int m) const;
  void validate(const SystemConfig& cfg) const;
};

struct GroupedBeamPlan {
  int group_size = 1;
  std::vector<PolarPosition> targets;
  std::vector<TtdConfig> groups;

  BeamPlan plan(const SystemConfig& cfg) const;
};

/// Frequency-flat phase shifters matched to `focus` at f_1.
TtdConfig ps_config(const SystemConfig& cfg, const PolarPosition& focus);
BeamPlan ps_beamformer(const SystemConfig& cfg, const PolarPosition& focus);

TtdConfig ttd_from_trajectory(const SystemConfig& cfg, const TrajectorySpec& traj,
                              BandwidthConvention conv = BandwidthConvention::kSpanned);
BeamPlan trajectory_plan(const SystemConfig& cfg, const TrajectorySpec& traj,
                         BandwidthConvention conv = BandwidthConvention::kSpanned);

CVector ttd_weights(const SystemConfig& cfg, const TtdConfig& ttd, int m);
CVector plan_weights(const SystemConfig& cfg, const BeamPlan& plan, int m);
/// N x M, column m-1 holds plan_weights(m).
CMatrix plan_weight_matrix(const SystemConfig& cfg, const BeamPlan& plan);

/// Predicted maximum-gain point of subcarrier m.
PolarPosition focal_point(const SystemConfig& cfg, const TrajectorySpec& traj, int m,
                          BandwidthConvention conv = BandwidthConvention::kSpanned);

/// Groups of `group_size` consecutive subcarriers, group l aimed at targets[l].
GroupedBeamPlan grouped_plan(const SystemConfig& cfg, const std::vector<PolarPosition>& targets,
                             int group_size);

struct GainMap {
  RVector ranges_m;
  RVector angles_rad;
  RMatrix gain;  // rows: ranges, cols: angles
  int argmax_range = 0;
  int argmax_angle = 0;

  PolarPosition peak() const { return {ranges_m[argmax_range], angles_rad[argmax_angle]}; }
};

/// |a(r, theta, f_m)^H w| on the grid; ties resolve to the lowest (range, angle) index.
GainMap gain_map(const SystemConfig& cfg, const CVector& weights, int m, const RVector& ranges_m,
                 const RVector& angles_rad);

}  // namespace cbsloc
