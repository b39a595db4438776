#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cbsloc/signal_chain.hpp"

namespace cbsloc {

struct SearchRegion {
  double r_min = 5.0;
  double r_max = 50.0;
  double theta_min = -kPi / 3;
  double theta_max = kPi / 3;

  void validate() const;
  PolarPosition clamp(const PolarPosition& p) const;
  bool contains(const PolarPosition& p) const;
  PolarPosition center() const { return {(r_min + r_max) / 2, (theta_min + theta_max) / 2}; }
};

/// Where stage-II groups are focused in range.
enum class AngleRefineFocus {
  kSweepDepth,  // depth of the stage-I sweep at that angle
  kMinRange,    // r_min for every group
};

struct CbsBtParams {
  int groups_angle = 128;     // L
  int groups_distance = 8;    // L2
  int max_iters = 5;          // J
  double stop_threshold_m = 0.5;
  double angle_window_rad = deg2rad(1.0);
  AngleRefineFocus refine_focus = AngleRefineFocus::kSweepDepth;
  BandwidthConvention convention = BandwidthConvention::kSpanned;

  void validate(const SystemConfig& cfg) const;
};

/// One UE behind a noisy downlink. Every transmit() is one beam sweep; the noise
/// of sweep s comes from make_stream(seed, stream_a, stream_b + s) so that
/// estimators run on the same link see identical noise on the same sweep index.
class SimulatedLink {
 public:
  SimulatedLink(const SystemConfig& cfg, const PolarPosition& ue, const VisibilityRegion& vr,
                double noise_var, std::uint64_t seed = 0, std::uint64_t stream_a = 0,
                std::uint64_t stream_b = 0);
  SimulatedLink(const SystemConfig& cfg, const PolarPosition& ue, const VisibilityRegion& vr,
                RVector noise_vars, std::uint64_t seed = 0, std::uint64_t stream_a = 0,
                std::uint64_t stream_b = 0);

  ReceivedFrame transmit(const BeamPlan& plan);
  int sweeps() const { return sweeps_; }
  void reset() { sweeps_ = 0; }

  const SystemConfig& config() const { return cfg_; }
  const PolarPosition& ue() const { return ue_; }
  const VisibilityRegion& visibility() const { return vr_; }

 private:
  SystemConfig cfg_;
  PolarPosition ue_;
  VisibilityRegion vr_;
  RVector noise_vars_;
  std::uint64_t seed_, stream_a_, stream_b_;
  int sweeps_ = 0;
};

struct StageRecord {
  std::string stage;
  int max_index = 0;  // subcarrier (1-based) or group (1-based)
  double angle_rad = 0.0;
  double range_m = 0.0;
  double bracket_lo_m = 0.0;
  double bracket_hi_m = 0.0;
};

struct LocalizationEstimate {
  double angle_rad = 0.0;
  double range_m = 0.0;
  int sweeps_used = 0;
  std::vector<StageRecord> stages;
  std::vector<ReceivedFrame> frames;

  PolarPosition position() const { return {range_m, angle_rad}; }
};

struct StageResult {
  double value = 0.0;  // angle (rad) or range (m)
  int m_max = 1;
  ReceivedFrame frame;
};

TrajectorySpec angle_sweep_trajectory(const SearchRegion& region);
TrajectorySpec distance_sweep_trajectory(const SearchRegion& region, double theta_hat);

double invert_angle(const SystemConfig& cfg, const TrajectorySpec& traj, int m_max,
                    BandwidthConvention conv = BandwidthConvention::kSpanned);
double invert_distance(const SystemConfig& cfg, const TrajectorySpec& traj, double theta_hat,
                       int m_max, BandwidthConvention conv = BandwidthConvention::kSpanned);

/// Range at which the stage-I sweep focuses angle theta.
double sweep_depth(const SearchRegion& region, double theta);

/// First index of the largest |y_m|.
int argmax_magnitude(const CVector& y);
/// sum_m |y_m| over consecutive groups of `group_size`.
RVector group_powers(const CVector& y, int group_size);

StageResult cbs_angle_stage(const SearchRegion& region, SimulatedLink& link,
                            BandwidthConvention conv = BandwidthConvention::kSpanned);
StageResult cbs_distance_stage(const SearchRegion& region, double theta_hat, SimulatedLink& link,
                               BandwidthConvention conv = BandwidthConvention::kSpanned);

/// Two-sweep baseline: angle sweep then distance sweep.
LocalizationEstimate cbs(const SearchRegion& region, SimulatedLink& link,
                         BandwidthConvention conv = BandwidthConvention::kSpanned);
/// Three-stage beam training: angle sweep, grouped angle refinement, iterative
/// grouped distance search.
LocalizationEstimate cbs_bt(const SearchRegion& region, const CbsBtParams& params,
                            SimulatedLink& link);

}  // namespace cbsloc
