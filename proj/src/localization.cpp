#include "cbsloc/localization.hpp"

#include <algorithm>

namespace cbsloc {

void SearchRegion::validate() const {
  if (!(r_min > 0.0)) throw ConfigError("r_min must be positive");
  if (!(r_min < r_max)) throw ConfigError("r_min must be below r_max");
  if (!(theta_min < theta_max)) throw ConfigError("theta_min must be below theta_max");
  if (!(theta_min > -kPi / 2 && theta_max < kPi / 2)) {
    throw ConfigError("angular sector must lie inside (-90, 90) degrees");
  }
}

PolarPosition SearchRegion::clamp(const PolarPosition& p) const {
  return {std::clamp(p.range_m, r_min, r_max), std::clamp(p.angle_rad, theta_min, theta_max)};
}

bool SearchRegion::contains(const PolarPosition& p) const {
  return p.range_m >= r_min && p.range_m <= r_max && p.angle_rad >= theta_min &&
         p.angle_rad <= theta_max;
}

void CbsBtParams::validate(const SystemConfig& cfg) const {
  if (groups_angle < 2 || groups_distance < 2) throw ConfigError("group counts must be >= 2");
  if (cfg.n_subcarriers % groups_angle != 0 || cfg.n_subcarriers % groups_distance != 0) {
    throw ConfigError("n_subcarriers must be divisible by both group counts");
  }
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(stop_threshold_m > 0.0)) throw ConfigError("stop threshold must be positive");
  if (!(angle_window_rad > 0.0)) throw ConfigError("angle window must be positive");
}

SimulatedLink::SimulatedLink(const SystemConfig& cfg, const PolarPosition& ue,
                             const VisibilityRegion& vr, double noise_var, std::uint64_t seed,
                             std::uint64_t stream_a, std::uint64_t stream_b)
    : SimulatedLink(cfg, ue, vr, RVector::Constant(cfg.n_subcarriers, noise_var), seed, stream_a,
                    stream_b) {}

SimulatedLink::SimulatedLink(const SystemConfig& cfg, const PolarPosition& ue,
                             const VisibilityRegion& vr, RVector noise_vars, std::uint64_t seed,
                             std::uint64_t stream_a, std::uint64_t stream_b)
    : cfg_(cfg), ue_(ue), vr_(vr), noise_vars_(std::move(noise_vars)), seed_(seed),
      stream_a_(stream_a), stream_b_(stream_b) {
  cfg_.validate();
  ue_.validate();
  vr_.validate_for(cfg_);
  if (noise_vars_.size() != cfg_.n_subcarriers) throw ConfigError("noise variance length mismatch");
  if ((noise_vars_.array() < 0.0).any()) throw ConfigError("noise variance must be non-negative");
}

ReceivedFrame SimulatedLink::transmit(const BeamPlan& plan) {
  const CVector u = noiseless_signal(cfg_, ue_, vr_, plan);
  Rng rng = make_stream(seed_, stream_a_, stream_b_ + static_cast<std::uint64_t>(sweeps_));
  ++sweeps_;
  return add_noise(u, noise_vars_, rng);
}

TrajectorySpec angle_sweep_trajectory(const SearchRegion& region) {
  region.validate();
  return {{region.r_min, region.theta_min}, {region.r_min, region.theta_max}};
}

TrajectorySpec distance_sweep_trajectory(const SearchRegion& region, double theta_hat) {
  region.validate();
  return {{region.r_min, theta_hat}, {region.r_max, theta_hat}};
}

double invert_angle(const SystemConfig& cfg, const TrajectorySpec& traj, int m_max,
                    BandwidthConvention conv) {
  return focal_point(cfg, traj, m_max, conv).angle_rad;
}

double invert_distance(const SystemConfig& cfg, const TrajectorySpec& traj, double theta_hat,
                       int m_max, BandwidthConvention conv) {
  TrajectorySpec t = traj;
  t.start.angle_rad = theta_hat;
  t.end.angle_rad = theta_hat;
  return focal_point(cfg, t, m_max, conv).range_m;
}

double sweep_depth(const SearchRegion& region, double theta) {
  const double s0 = std::sin(region.theta_min), s1 = std::sin(region.theta_max);
  const double b = (std::sin(theta) - s0) / (s1 - s0);
  const double a = 1.0 - b;
  const double c0 = std::cos(region.theta_min), c1 = std::cos(region.theta_max);
  const double ct = std::cos(theta);
  return region.r_min * ct * ct / (a * c0 * c0 + b * c1 * c1);
}

int argmax_magnitude(const CVector& y) {
  if (y.size() == 0) throw ConfigError("empty frame");
  int best = 0;
  double best_v = std::abs(y[0]);
  for (Eigen::Index i = 1; i < y.size(); ++i) {
    const double v = std::abs(y[i]);
    if (v > best_v) {
      best_v = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

RVector group_powers(const CVector& y, int group_size) {
  if (group_size < 1 || y.size() % group_size != 0) throw ConfigError("bad group size");
  const Eigen::Index n_groups = y.size() / group_size;
  RVector p(n_groups);
  for (Eigen::Index l = 0; l < n_groups; ++l) {
    p[l] = y.segment(l * group_size, group_size).cwiseAbs().sum();
  }
  return p;
}

namespace {

int argmax_first(const RVector& v) {
  Eigen::Index idx = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[idx]) idx = i;
  }
  return static_cast<int>(idx);
}

}  // namespace

StageResult cbs_angle_stage(const SearchRegion& region, SimulatedLink& link,
                            BandwidthConvention conv) {
  const SystemConfig& cfg = link.config();
  const TrajectorySpec traj = angle_sweep_trajectory(region);
  StageResult out;
  out.frame = link.transmit(trajectory_plan(cfg, traj, conv));
  out.m_max = argmax_magnitude(out.frame.samples) + 1;
  out.value = std::clamp(invert_angle(cfg, traj, out.m_max, conv), region.theta_min,
                         region.theta_max);
  return out;
}

StageResult cbs_distance_stage(const SearchRegion& region, double theta_hat, SimulatedLink& link,
                               BandwidthConvention conv) {
  const SystemConfig& cfg = link.config();
  const TrajectorySpec traj = distance_sweep_trajectory(region, theta_hat);
  StageResult out;
  out.frame = link.transmit(trajectory_plan(cfg, traj, conv));
  out.m_max = argmax_magnitude(out.frame.samples) + 1;
  out.value = std::clamp(invert_distance(cfg, traj, theta_hat, out.m_max, conv), region.r_min,
                         region.r_max);
  return out;
}

LocalizationEstimate cbs(const SearchRegion& region, SimulatedLink& link, BandwidthConvention conv) {
  const int before = link.sweeps();
  StageResult s1 = cbs_angle_stage(region, link, conv);
  StageResult s2 = cbs_distance_stage(region, s1.value, link, conv);
  LocalizationEstimate est;
  est.angle_rad = s1.value;
  est.range_m = s2.value;
  est.sweeps_used = link.sweeps() - before;
  est.stages.push_back({"angle", s1.m_max, s1.value, 0.0, 0.0, 0.0});
  est.stages.push_back({"distance", s2.m_max, s1.value, s2.value, region.r_min, region.r_max});
  est.frames.push_back(std::move(s1.frame));
  est.frames.push_back(std::move(s2.frame));
  return est;
}

LocalizationEstimate cbs_bt(const SearchRegion& region, const CbsBtParams& params,
                            SimulatedLink& link) {
  const SystemConfig& cfg = link.config();
  params.validate(cfg);
  region.validate();
  const int before = link.sweeps();
  LocalizationEstimate est;

  StageResult s1 = cbs_angle_stage(region, link, params.convention);
  est.stages.push_back({"angle", s1.m_max, s1.value, 0.0, 0.0, 0.0});
  est.frames.push_back(std::move(s1.frame));

  // Stage II: L groups on a descending angle grid around the coarse estimate.
  const int L = params.groups_angle;
  const double hi = std::min(region.theta_max, s1.value + params.angle_window_rad);
  const double lo = std::max(region.theta_min, s1.value - params.angle_window_rad);
  std::vector<PolarPosition> targets(L);
  for (int l = 0; l < L; ++l) {
    const double th = hi - l * (hi - lo) / (L - 1);
    const double r = params.refine_focus == AngleRefineFocus::kSweepDepth
                         ? std::clamp(sweep_depth(region, th), region.r_min, region.r_max)
                         : region.r_min;
    targets[l] = {r, th};
  }
  const int ms = cfg.n_subcarriers / L;
  ReceivedFrame f2 = link.transmit(grouped_plan(cfg, targets, ms).plan(cfg));
  const int l2 = argmax_first(group_powers(f2.samples, ms));
  const double theta_ref = targets[l2].angle_rad;
  est.stages.push_back({"angle_refine", l2 + 1, theta_ref, targets[l2].range_m, 0.0, 0.0});
  est.frames.push_back(std::move(f2));

  // Stage III: shrink a range bracket around the strongest group.
  const int L2 = params.groups_distance;
  const int ms2 = cfg.n_subcarriers / L2;
  double r_lo = region.r_min, r_hi = region.r_max;
  double r_hat = region.center().range_m;
  for (int j = 1; j <= params.max_iters && r_hi - r_lo >= params.stop_threshold_m; ++j) {
    std::vector<PolarPosition> foci(L2);
    for (int l = 0; l < L2; ++l) foci[l] = {r_lo + l * (r_hi - r_lo) / (L2 - 1), theta_ref};
    ReceivedFrame f3 = link.transmit(grouped_plan(cfg, foci, ms2).plan(cfg));
    const int lm = argmax_first(group_powers(f3.samples, ms2));
    r_hat = foci[lm].range_m;
    // an edge winner keeps its own focus as the new bracket end
    const double new_lo = foci[std::max(lm - 1, 0)].range_m;
    const double new_hi = foci[std::min(lm + 1, L2 - 1)].range_m;
    est.stages.push_back({"distance_iter_" + std::to_string(j), lm + 1, theta_ref, r_hat, new_lo,
                          new_hi});
    est.frames.push_back(std::move(f3));
    r_lo = new_lo;
    r_hi = new_hi;
  }

  const PolarPosition p = region.clamp({r_hat, theta_ref});
  est.angle_rad = p.angle_rad;
  est.range_m = p.range_m;
  est.sweeps_used = link.sweeps() - before;
  return est;
}

}  // namespace cbsloc
