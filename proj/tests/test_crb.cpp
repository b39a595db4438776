#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "cbsloc/crb.hpp"
#include "cbsloc/localization.hpp"

using namespace cbsloc;
using doctest::Approx;

namespace {

// Richardson-extrapolated central difference: O(h^4) truncation.
template <class F>
CVector richardson(F&& u_at, double h) {
  const CVector d1 = (u_at(h) - u_at(-h)) / (2 * h);
  const CVector d2 = (u_at(h / 2) - u_at(-h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

double rel(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("partials agree with finite differences of the signal") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ur(5.0, 50.0), ut(-1.0, 1.0);
  std::uniform_int_distribution<int> uv(1, 15);
  const auto cfg = SystemConfig::make(64, 100e9, 6e9, 64);
  double worst_r = 0.0, worst_t = 0.0;
  for (int i = 0; i < 100; ++i) {
    const TrajectorySpec t{{ur(rng), ut(rng)}, {ur(rng), ut(rng)}};
    const BeamPlan plan = trajectory_plan(cfg, t);
    const PolarPosition ue{ur(rng), ut(rng)};
    const int bits = uv(rng);
    VisibilityRegion vr{4, {}};
    for (int k = 0; k < 4; ++k)
      if (bits & (1 << k)) vr.visible.push_back(k + 1);
    const SignalPartials p = signal_derivatives(cfg, ue, vr, plan);
    const CVector fd_r = richardson(
        [&](double h) { return noiseless_signal(cfg, {ue.range_m + h, ue.angle_rad}, vr, plan); }, 1e-5);
    const CVector fd_t = richardson(
        [&](double h) { return noiseless_signal(cfg, {ue.range_m, ue.angle_rad + h}, vr, plan); }, 1e-6);
    worst_r = std::max(worst_r, rel(fd_r, p.d_range));
    worst_t = std::max(worst_t, rel(fd_t, p.d_angle));
  }
  CHECK(worst_r < 1e-5);
  CHECK(worst_t < 1e-5);
}

TEST_CASE("partials at full scale") {
  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  const PolarPosition ue{15.0, 0.0};
  const VisibilityRegion vr{4, {1}};
  const SignalPartials p = signal_derivatives(cfg, ue, vr, plan);
  const CVector fd_t = richardson(
      [&](double h) { return noiseless_signal(cfg, {ue.range_m, ue.angle_rad + h}, vr, plan); }, 1e-6);
  CHECK(rel(fd_t, p.d_angle) < 1e-5);
  CHECK(rel(d_u_d_range(cfg, ue, vr, plan), p.d_range) == 0.0);
  CHECK(rel(d_u_d_angle(cfg, ue, vr, plan), p.d_angle) == 0.0);
}

TEST_CASE("partials are additive over disjoint visibility regions and linear in the pilot") {
  const auto cfg = SystemConfig::make(128, 100e9, 6e9, 128);
  const BeamPlan plan = trajectory_plan(cfg, distance_sweep_trajectory(SearchRegion{}, 0.2));
  const PolarPosition ue{9.0, 0.25};
  const auto a = signal_derivatives(cfg, ue, {4, {1, 3}}, plan);
  const auto b = signal_derivatives(cfg, ue, {4, {2, 4}}, plan);
  const auto all = signal_derivatives(cfg, ue, VisibilityRegion::stationary(4), plan);
  CHECK(rel(a.d_range + b.d_range, all.d_range) < 1e-12);
  CHECK(rel(a.d_angle + b.d_angle, all.d_angle) < 1e-12);
  const std::complex<double> s(0.0, 3.0);
  const auto scaled = signal_derivatives(cfg, ue, VisibilityRegion::stationary(4), plan, s);
  CHECK(rel(scaled.d_angle, s * all.d_angle) < 1e-13);
}

TEST_CASE("fisher information structure") {
  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  const VisibilityRegion vr = VisibilityRegion::stationary(4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ur(5.0, 50.0), ut(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const PolarPosition ue{ur(rng), ut(rng)};
    const auto F1 = fim(cfg, ue, vr, plan, 1e-9);
    const auto F2 = fim(cfg, ue, vr, plan, 2e-9);
    CHECK((F1 - 2 * F2).norm() <= 1e-12 * F1.norm());
    CHECK(F1(0, 0) >= 0.0);
    CHECK(F1(1, 1) >= 0.0);
    CHECK(F1(0, 1) == F1(1, 0));
    CHECK(F1.determinant() >= 0.0);
  }
}

TEST_CASE("closed-form bound equals the matrix inverse") {
  Eigen::Matrix2d F;
  F << 4.0, 1.5, 1.5, 2.0;
  const CrbResult r = crb_from_fim(F);
  const Eigen::Matrix2d inv = F.inverse();
  CHECK(r.crb_range == Approx(inv(0, 0)).epsilon(1e-12));
  CHECK(r.crb_angle == Approx(inv(1, 1)).epsilon(1e-12));
  CHECK(r.root_crb_range() == Approx(std::sqrt(inv(0, 0))));

  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  const CrbResult c = crb(cfg, {20.0, -0.4}, VisibilityRegion::stationary(4), plan, 1e-10);
  const Eigen::Matrix2d ci = c.fim.inverse();
  CHECK(c.crb_range == Approx(ci(0, 0)).epsilon(1e-10));
  CHECK(c.crb_angle == Approx(ci(1, 1)).epsilon(1e-10));
}

TEST_CASE("degenerate information is rejected") {
  Eigen::Matrix2d zero = Eigen::Matrix2d::Zero();
  CHECK_THROWS_AS(crb_from_fim(zero), SingularFimError);
  Eigen::Matrix2d rank1;
  rank1 << 1.0, 2.0, 2.0, 4.0;
  CHECK_THROWS_AS(crb_from_fim(rank1), SingularFimError);
  Eigen::Matrix2d ill;
  ill << 1.0, 0.0, 0.0, 1e-13;
  CHECK_THROWS_AS(crb_from_fim(ill), SingularFimError);
  Eigen::Matrix2d ok;
  ok << 1.0, 0.0, 0.0, 1e-11;
  CHECK_NOTHROW(crb_from_fim(ok));

  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  CHECK_THROWS_AS(crb(cfg, {15.0, 0.0}, VisibilityRegion::stationary(4), plan, 0.0), ConfigError);
  CHECK_THROWS_AS(crb(cfg, {15.0, 0.0}, VisibilityRegion::stationary(4), plan, -1.0), ConfigError);
}

TEST_CASE("bound shrinks with SNR and with subcarrier count") {
  const PolarPosition ue{15.0, 0.0};
  const VisibilityRegion vr = VisibilityRegion::stationary(4);
  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  const CrbResult lo = crb(cfg, ue, vr, plan, 1e-8), hi = crb(cfg, ue, vr, plan, 1e-9);
  CHECK(hi.crb_angle == Approx(lo.crb_angle / 10).epsilon(1e-10));
  CHECK(hi.crb_range == Approx(lo.crb_range / 10).epsilon(1e-10));

  double prev_t = 1e300, prev_r = 1e300;
  for (int M : {256, 512, 1024, 2048}) {
    const auto c = SystemConfig::make(512, 100e9, 6e9, M);
    const BeamPlan p = trajectory_plan(c, angle_sweep_trajectory(SearchRegion{}));
    const CrbResult r = crb(c, ue, vr, p, 1e-9);
    CHECK(r.crb_angle < prev_t);
    CHECK(r.crb_range < prev_r);
    prev_t = r.crb_angle;
    prev_r = r.crb_range;
  }
}

TEST_CASE("full visibility bounds the angle tighter than a partial region") {
  SystemConfig cfg;
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  for (double th : {-0.5, 0.0, 0.3}) {
    const PolarPosition ue{15.0, th};
    const double full = crb(cfg, ue, VisibilityRegion::stationary(4), plan, 1e-9).crb_angle;
    const double part = crb(cfg, ue, {4, {1}}, plan, 1e-9).crb_angle;
    CHECK(full < part);
  }
}

TEST_CASE("vector noise variance reduces to the scalar case") {
  const auto cfg = SystemConfig::make(128, 100e9, 6e9, 256);
  const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(SearchRegion{}));
  const PolarPosition ue{12.0, 0.1};
  const VisibilityRegion vr = VisibilityRegion::stationary(4);
  const CrbResult s = crb(cfg, ue, vr, plan, 3e-9);
  const CrbResult v = crb(cfg, ue, vr, plan, RVector::Constant(256, 3e-9));
  CHECK(v.crb_angle == Approx(s.crb_angle).epsilon(1e-12));
  CHECK(v.crb_range == Approx(s.crb_range).epsilon(1e-12));
  RVector bad = RVector::Constant(256, 3e-9);
  bad[7] = 0.0;
  CHECK_THROWS_AS(crb(cfg, ue, vr, plan, bad), ConfigError);
  CHECK_THROWS_AS(crb(cfg, ue, vr, plan, RVector::Constant(10, 1.0)), ConfigError);
}
