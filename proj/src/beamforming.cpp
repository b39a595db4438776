#include "cbsloc/beamforming.hpp"

#include <algorithm>
#include <string>

namespace cbsloc {

namespace {

RVector focus_distances(const SystemConfig& cfg, const PolarPosition& p) {
  p.validate();
  return antenna_distances(cfg, p);
}

void shift_to_nonnegative(RVector& delays) {
  if (delays.size() > 0) delays.array() -= delays.minCoeff();
}

}  // namespace

void TrajectorySpec::validate() const {
  start.validate();
  end.validate();
}

BeamPlan BeamPlan::single(const SystemConfig& cfg, TtdConfig ttd) {
  BeamPlan plan;
  plan.segments.push_back({1, cfg.n_subcarriers, std::move(ttd)});
  return plan;
}

const BeamSegment& BeamPlan::segment_for(int m) const {
  for (const auto& s : segments) {
    if (m >= s.first_m && m <= s.last_m) return s;
  }
  throw std::out_of_range("no beam segment covers subcarrier " + std::to_string(m));
}

void BeamPlan::validate(const SystemConfig& cfg) const {
  if (segments.empty()) throw ConfigError("beam plan has no segments");
  int next = 1;
  for (const auto& s : segments) {
    if (s.first_m != next || s.last_m < s.first_m) {
      throw ConfigError("beam plan segments must tile the subcarriers in order");
    }
    if (s.ttd.phases.size() != cfg.n_antennas || s.ttd.delays.size() != cfg.n_antennas) {
      throw ConfigError("beam segment length does not match n_antennas");
    }
    if (!s.ttd.phases.allFinite() || !s.ttd.delays.allFinite()) {
      throw ConfigError("beam segment has non-finite phases or delays");
    }
    next = s.last_m + 1;
  }
  if (next != cfg.n_subcarriers + 1) throw ConfigError("beam plan does not cover all subcarriers");
}

BeamPlan GroupedBeamPlan::plan(const SystemConfig& cfg) const {
  BeamPlan out;
  for (std::size_t l = 0; l < groups.size(); ++l) {
    const int first = 1 + static_cast<int>(l) * group_size;
    out.segments.push_back({first, first + group_size - 1, groups[l]});
  }
  out.validate(cfg);
  return out;
}

TtdConfig ps_config(const SystemConfig& cfg, const PolarPosition& focus) {
  TtdConfig ttd;
  ttd.base_freq_hz = subcarrier_frequency(cfg, 1);
  ttd.phases = focus_distances(cfg, focus) * (ttd.base_freq_hz / cfg.lightspeed_mps);
  ttd.delays = RVector::Zero(cfg.n_antennas);
  return ttd;
}

BeamPlan ps_beamformer(const SystemConfig& cfg, const PolarPosition& focus) {
  return BeamPlan::single(cfg, ps_config(cfg, focus));
}

TtdConfig ttd_from_trajectory(const SystemConfig& cfg, const TrajectorySpec& traj,
                              BandwidthConvention conv) {
  traj.validate();
  if (cfg.n_subcarriers < 2) {
    throw ConfigError("a beam-squint trajectory needs at least two subcarriers");
  }
  const double f1 = subcarrier_frequency(cfg, 1);
  const double fM = subcarrier_frequency(cfg, cfg.n_subcarriers);
  const double span =
      conv == BandwidthConvention::kSpanned ? fM - f1 : cfg.bandwidth_hz;
  const double c = cfg.lightspeed_mps;

  TtdConfig ttd;
  ttd.base_freq_hz = f1;
  ttd.phases = focus_distances(cfg, traj.start) * (f1 / c);
  ttd.delays = focus_distances(cfg, traj.end) * (fM / (c * span)) - ttd.phases / span;
  shift_to_nonnegative(ttd.delays);
  return ttd;
}

BeamPlan trajectory_plan(const SystemConfig& cfg, const TrajectorySpec& traj,
                         BandwidthConvention conv) {
  return BeamPlan::single(cfg, ttd_from_trajectory(cfg, traj, conv));
}

CVector ttd_weights(const SystemConfig& cfg, const TtdConfig& ttd, int m) {
  if (ttd.phases.size() != cfg.n_antennas || ttd.delays.size() != cfg.n_antennas) {
    throw ConfigError("TTD configuration length does not match n_antennas");
  }
  const double df = subcarrier_frequency(cfg, m) - ttd.base_freq_hz;
  const double scale = 1.0 / std::sqrt(double(cfg.n_antennas));
  CVector w(cfg.n_antennas);
  for (int n = 0; n < cfg.n_antennas; ++n) {
    const double cycles = std::remainder(ttd.phases[n], 1.0) + std::remainder(df * ttd.delays[n], 1.0);
    w[n] = std::polar(scale, -2.0 * kPi * cycles);
  }
  return w;
}

CVector plan_weights(const SystemConfig& cfg, const BeamPlan& plan, int m) {
  return ttd_weights(cfg, plan.segment_for(m).ttd, m);
}

CMatrix plan_weight_matrix(const SystemConfig& cfg, const BeamPlan& plan) {
  CMatrix w(cfg.n_antennas, cfg.n_subcarriers);
  for (int m = 1; m <= cfg.n_subcarriers; ++m) w.col(m - 1) = plan_weights(cfg, plan, m);
  return w;
}

PolarPosition focal_point(const SystemConfig& cfg, const TrajectorySpec& traj, int m,
                          BandwidthConvention conv) {
  traj.validate();
  const double f1 = subcarrier_frequency(cfg, 1);
  const double fm = subcarrier_frequency(cfg, m);
  const double ft = fm - f1;
  double a, b;
  if (conv == BandwidthConvention::kSpanned) {
    const double span = subcarrier_frequency(cfg, cfg.n_subcarriers) - f1;
    if (!(span > 0.0)) throw ConfigError("focal_point needs at least two subcarriers");
    a = (span - ft) * f1 / (span * fm);
    b = (span + f1) * ft / (span * fm);
  } else {
    const double bw = cfg.bandwidth_hz;
    a = (bw - ft) * f1 / (bw * fm);
    b = (bw + f1) * ft / (bw * fm);
  }
  const double s = a * std::sin(traj.start.angle_rad) + b * std::sin(traj.end.angle_rad);
  if (!(std::abs(s) < 1.0)) throw ConfigError("trajectory blend leaves the valid sine range");
  const double theta = std::asin(s);
  const double cs = std::cos(traj.start.angle_rad), ce = std::cos(traj.end.angle_rad);
  const double ct = std::cos(theta);
  const double inv_r = (a * cs * cs / traj.start.range_m + b * ce * ce / traj.end.range_m) / (ct * ct);
  if (!(inv_r > 0.0)) throw ConfigError("trajectory blend yields a non-positive range");
  return {1.0 / inv_r, theta};
}

GroupedBeamPlan grouped_plan(const SystemConfig& cfg, const std::vector<PolarPosition>& targets,
                             int group_size) {
  if (group_size < 1) throw ConfigError("group size must be positive");
  if (cfg.n_subcarriers % group_size != 0) {
    throw ConfigError("n_subcarriers must be divisible by the group size");
  }
  const int n_groups = cfg.n_subcarriers / group_size;
  if (static_cast<int>(targets.size()) != n_groups) {
    throw ConfigError("grouped plan needs exactly M / group_size targets");
  }
  GroupedBeamPlan out;
  out.group_size = group_size;
  out.targets = targets;
  const double c = cfg.lightspeed_mps;
  for (int l = 0; l < n_groups; ++l) {
    const double base = subcarrier_frequency(cfg, 1 + l * group_size);
    const double end = subcarrier_frequency(cfg, (l + 1) * group_size);
    const RVector dist = focus_distances(cfg, targets[l]);
    TtdConfig ttd;
    ttd.base_freq_hz = base;
    ttd.phases = dist * (base / c);
    if (group_size == 1) {
      ttd.delays = RVector::Zero(cfg.n_antennas);
    } else {
      const double span = end - base;
      ttd.delays = dist * (end / (c * span)) - ttd.phases / span;
      shift_to_nonnegative(ttd.delays);
    }
    out.groups.push_back(std::move(ttd));
  }
  return out;
}

GainMap gain_map(const SystemConfig& cfg, const CVector& weights, int m, const RVector& ranges_m,
                 const RVector& angles_rad) {
  if (ranges_m.size() == 0 || angles_rad.size() == 0) throw ConfigError("gain map grid is empty");
  if (weights.size() != cfg.n_antennas) throw ConfigError("weight length does not match n_antennas");
  const double f = subcarrier_frequency(cfg, m);
  GainMap g;
  g.ranges_m = ranges_m;
  g.angles_rad = angles_rad;
  g.gain.resize(ranges_m.size(), angles_rad.size());
  double best = -1.0;
  for (Eigen::Index i = 0; i < ranges_m.size(); ++i) {
    for (Eigen::Index j = 0; j < angles_rad.size(); ++j) {
      const CVector a = array_response_at<double>(cfg, {ranges_m[i], angles_rad[j]}, f);
      const double v = std::abs(a.dot(weights));
      g.gain(i, j) = v;
      if (v > best) {
        best = v;
        g.argmax_range = static_cast<int>(i);
        g.argmax_angle = static_cast<int>(j);
      }
    }
  }
  return g;
}

}  // namespace cbsloc
