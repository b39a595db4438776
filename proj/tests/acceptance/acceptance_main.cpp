// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbsloc/crb.hpp"
#include "cbsloc/harness.hpp"
#include "cbsloc/localization.hpp"

using namespace cbsloc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

// ---------------------------------------------------------------------------

Outcome c1_focal_points() {
  const auto cfg = SystemConfig::make(512, 100e9, 6e9, 20);
  const TrajectorySpec t{{20.0, deg2rad(60.0)}, {20.0, 0.0}};
  const PolarPosition p5 = focal_point(cfg, t, 5), p16 = focal_point(cfg, t, 16);
  const bool ok = within(p5.range_m, 26.21, 0.15) && within(rad2deg(p5.angle_rad), 42.45, 0.15) &&
                  within(p16.range_m, 22.83, 0.15) && within(rad2deg(p16.angle_rad), 10.01, 0.15);
  return {ok, fmt("m=5 (%.4f m, %.4f deg), m=16 (%.4f m, %.4f deg)", p5.range_m, rad2deg(p5.angle_rad),
                  p16.range_m, rad2deg(p16.angle_rad))};
}

Outcome c2_ps_squint() {
  SystemConfig cfg;
  const BeamPlan plan = ps_beamformer(cfg, {10.0, deg2rad(75.0)});
  const int m = cfg.n_subcarriers;
  const double step_r = 0.05, step_t = 0.05;
  RVector ranges(301), angles(201);
  for (int i = 0; i < ranges.size(); ++i) ranges[i] = 20.0 + i * step_r;
  for (int j = 0; j < angles.size(); ++j) angles[j] = deg2rad(60.0 + j * step_t);
  const GainMap g = gain_map(cfg, plan_weights(cfg, plan, m), m, ranges, angles);
  const PolarPosition pk = g.peak();
  const double eps = 1e-9;
  const bool interior = g.argmax_range > 0 && g.argmax_range < ranges.size() - 1 && g.argmax_angle > 0 &&
                        g.argmax_angle < angles.size() - 1;
  const bool ok = interior && std::abs(pk.range_m - 27.29) <= step_r + eps &&
                  std::abs(rad2deg(pk.angle_rad) - 65.48) <= step_t + eps;
  return {ok, fmt("peak (%.2f m, %.2f deg) on 0.05 m x 0.05 deg grid", pk.range_m, rad2deg(pk.angle_rad))};
}

Outcome c3_noise_free_cbs() {
  SystemConfig cfg;
  const SearchRegion region;
  SimulatedLink full(cfg, {15.0, 0.0}, VisibilityRegion::stationary(4), 0.0);
  SimulatedLink part(cfg, {15.0, 0.0}, {4, {1}}, 0.0);
  const LocalizationEstimate a = cbs(region, full), b = cbs(region, part);
  const double ta = rad2deg(a.angle_rad), tb = rad2deg(b.angle_rad);
  const bool ok_s = std::abs(ta) <= 0.02 && std::abs(a.range_m - 14.99) <= 0.1;
  const bool ok_n = tb >= 0.05 && tb <= 0.12 && b.range_m >= 19.0 && b.range_m <= 21.0;
  return {ok_s && ok_n,
          fmt("stationary (%.4f deg, %.4f m) %s; non-stationary (%.4f deg, %.4f m) %s", ta, a.range_m,
              ok_s ? "ok" : "out", tb, b.range_m, ok_n ? "ok" : "out")};
}

int half_peak_count(const CVector& y) {
  const RVector a = y.cwiseAbs();
  return static_cast<int>((a.array() > 0.5 * a.maxCoeff()).count());
}

Outcome c4_half_peak_counts() {
  SystemConfig cfg;
  SimulatedLink link(cfg, {15.0, 0.0}, {4, {1}}, 0.0);
  const LocalizationEstimate e = cbs(SearchRegion{}, link);
  const int n1 = half_peak_count(e.frames[0].samples), n2 = half_peak_count(e.frames[1].samples);
  const bool ok = std::abs(n1 - 22) <= 3 && std::abs(n2 - 688) <= 35;
  return {ok, fmt("angle stage %d (22 +/- 3), distance stage %d (688 +/- 35)", n1, n2)};
}

// Root bounds averaged over random positions.
struct CrbCell {
  double theta = 0.0, range = 0.0;
};

CrbCell crb_cell(const std::vector<CrbRow>& rows, double snr, int M, double B, bool stationary) {
  for (const auto& r : rows) {
    if (r.snr_db == snr && r.n_subcarriers == M && r.bandwidth_hz == B && r.stationary == stationary) {
      return {r.root_crb_theta_rad, r.root_crb_r_m};
    }
  }
  throw std::logic_error("missing CRB row");
}

Outcome c5_crb_percentages() {
  CrbSweepSpec s;
  s.snr_grid_db = {10.0, 30.0};
  s.subcarrier_counts = {256, 2048};
  s.bandwidths_hz = {1e9, 3e9, 6e9};
  s.vr_cases = {VisibilityRegion::stationary(4), {4, {1}}};
  s.position_law = PositionLaw::uniform_over(s.region);
  s.n_positions = 32;
  s.seed = 2024;
  const auto rows = crb_sweep(s);
  for (const auto& r : rows) {
    if (r.n_singular) return {false, fmt("%d singular positions", r.n_singular)};
  }

  const auto red = [&](double snr) {
    return 100.0 * (1.0 - crb_cell(rows, snr, 2048, 6e9, true).theta / crb_cell(rows, snr, 256, 6e9, true).theta);
  };
  const double r10 = red(10.0), r30 = red(30.0);
  const bool ok_m = within(r10, 85.26, 2.0) && within(r30, 85.21, 2.0);

  const CrbCell b1 = crb_cell(rows, 10.0, 2048, 1e9, true), b3 = crb_cell(rows, 10.0, 2048, 3e9, true),
                b6 = crb_cell(rows, 10.0, 2048, 6e9, true);
  const double tmax = std::max({b1.theta, b3.theta, b6.theta}), tmin = std::min({b1.theta, b3.theta, b6.theta});
  const double b_spread = 100.0 * (tmax - tmin) / tmin;
  const bool ok_b = b_spread < 5.0 && b1.range > b3.range && b3.range > b6.range;

  bool ok_vr = true;
  double worst_r = 0.0;
  for (double snr : {10.0, 30.0}) {
    const CrbCell st = crb_cell(rows, snr, 2048, 6e9, true), ns = crb_cell(rows, snr, 2048, 6e9, false);
    const double dr = 100.0 * std::abs(ns.range - st.range) / st.range;
    worst_r = std::max(worst_r, dr);
    ok_vr = ok_vr && st.theta < ns.theta && dr < 5.0;
  }
  return {ok_m && ok_b && ok_vr,
          fmt("M 256->2048 reduction %.2f%% @10dB, %.2f%% @30dB %s; B theta spread %.2f%%, r %.3g>%.3g>%.3g %s; "
              "VR r diff %.1f%% %s (mean of %d random positions)",
              r10, r30, ok_m ? "ok" : "out", b_spread, b1.range, b3.range, b6.range, ok_b ? "ok" : "out",
              worst_r, ok_vr ? "ok" : "out", s.n_positions)};
}

template <class F>
CVector richardson(F&& u_at, double h) {
  const CVector d1 = (u_at(h) - u_at(-h)) / (2 * h);
  const CVector d2 = (u_at(h / 2) - u_at(-h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

Outcome c6_derivative_oracle() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> ur(5.0, 50.0), ut(-1.0, 1.0), ub(1e9, 8e9);
  std::uniform_int_distribution<int> un(8, 64), um(16, 256), uv(1, 15);
  double worst = 0.0, worst_inv = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto cfg = SystemConfig::make(4 * un(rng), 100e9, ub(rng), um(rng));
    const TrajectorySpec t{{ur(rng), ut(rng)}, {ur(rng), ut(rng)}};
    const BeamPlan plan = trajectory_plan(cfg, t);
    const PolarPosition ue{ur(rng), ut(rng)};
    VisibilityRegion vr{4, {}};
    const int bits = uv(rng);
    for (int k = 0; k < 4; ++k)
      if (bits & (1 << k)) vr.visible.push_back(k + 1);
    const SignalPartials p = signal_derivatives(cfg, ue, vr, plan);
    const CVector fr = richardson(
        [&](double h) { return noiseless_signal(cfg, {ue.range_m + h, ue.angle_rad}, vr, plan); }, 1e-5);
    const CVector ft = richardson(
        [&](double h) { return noiseless_signal(cfg, {ue.range_m, ue.angle_rad + h}, vr, plan); }, 1e-6);
    worst = std::max({worst, (fr - p.d_range).norm() / p.d_range.norm(),
                      (ft - p.d_angle).norm() / p.d_angle.norm()});
    try {
      const CrbResult c = crb(cfg, ue, vr, plan, 1e-10);
      const Eigen::Matrix2d inv = c.fim.inverse();
      worst_inv = std::max({worst_inv, std::abs(c.crb_range - inv(0, 0)) / inv(0, 0),
                            std::abs(c.crb_angle - inv(1, 1)) / inv(1, 1)});
    } catch (const SingularFimError&) {
    }
  }
  return {worst < 1e-5 && worst_inv <= 1e-12,
          fmt("worst partial rel. error %.2e (< 1e-5), worst inverse rel. error %.2e (<= 1e-12)", worst, worst_inv)};
}

Outcome c7_estimator_ordering() {
  ExperimentSpec spec;
  spec.n_trials = 500;
  spec.snr_grid_db = {10.0, 20.0, 30.0};
  spec.position_law = PositionLaw::uniform_over(spec.region);
  spec.vr_law.kind = VrLaw::Kind::kRandom;
  spec.vr_law.n_subarrays = 4;
  spec.seed = 7;
  spec.with_crb = true;
  spec.threads = 1;
  spec.estimator = EstimatorKind::kCbs;
  const RmseReport base = monte_carlo(spec);
  spec.estimator = EstimatorKind::kCbsBt;
  const RmseReport bt = monte_carlo(spec);

  const double slack = 1.10;
  bool ok = true;
  std::string d;
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    const RmseRow &c = base.rows[i], &b = bt.rows[i];
    const bool row_ok = b.rmse_angle <= slack * c.rmse_angle && b.rmse_range <= slack * c.rmse_range;
    ok = ok && row_ok;
    d += fmt("%gdB theta %.3g vs %.3g, r %.3g vs %.3g %s; ", c.snr_db, b.rmse_angle, c.rmse_angle, b.rmse_range,
             c.rmse_range, row_ok ? "ok" : "out");
  }
  for (const RmseReport* r : {&base, &bt}) {
    const RmseRow& last = r->rows.back();
    const bool bound_ok = last.rmse_angle * last.rmse_angle >= last.mean_crb_angle &&
                          last.rmse_range * last.rmse_range >= last.mean_crb_range;
    ok = ok && bound_ok;
    d += fmt("%s 30dB MSE >= CRB %s; ", r->estimator.c_str(), bound_ok ? "ok" : "out");
  }
  return {ok, d + "CBS-BT vs CBS, 500 trials"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1", "trajectory focal points", c1_focal_points},
      {"C2", "phase-shifter beam squint", c2_ps_squint},
      {"C3", "noise-free CBS reproduction", c3_noise_free_cbs},
      {"C4", "half-peak subcarrier counts", c4_half_peak_counts},
      {"C5", "CRB percentages", c5_crb_percentages},
      {"C6", "derivative oracle", c6_derivative_oracle},
      {"C7", "estimator ordering", c7_estimator_ordering},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s: %s [%.2fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
