#include "cbsloc/crb.hpp"

#include <Eigen/Eigenvalues>

namespace cbsloc {

namespace {
constexpr double kMaxCondition = 1e12;
}

SignalPartials signal_derivatives(const SystemConfig& cfg, const PolarPosition& pos,
                                  const VisibilityRegion& vr, const BeamPlan& plan,
                                  std::complex<double> pilot) {
  pos.validate();
  const double r = pos.range_m;
  const double st = std::sin(pos.angle_rad), ct = std::cos(pos.angle_rad);
  const RVector mask = vr_mask(cfg, vr);
  const RVector off = centered_antenna_indices(cfg) * cfg.spacing_m;

  // columns: S0 (plain), S1 (d r_n / d r), S2 (d r_n / d theta)
  RMatrix coeffs(cfg.n_antennas, 3);
  coeffs.col(0) = mask;
  coeffs.col(1) = mask.array() * (1.0 - off.array().square() * ct * ct / (2.0 * r * r));
  coeffs.col(2) = mask.array() * (-off.array() * ct - off.array().square() * st * ct / r);
  const CMatrix s = phasor_sums(cfg, pos, plan, coeffs);

  SignalPartials p;
  p.d_range.resize(cfg.n_subcarriers);
  p.d_angle.resize(cfg.n_subcarriers);
  const std::complex<double> j(0.0, 1.0);
  const double inv_sqrt_n = 1.0 / std::sqrt(double(cfg.n_antennas));
  for (int m = 1; m <= cfg.n_subcarriers; ++m) {
    const double k = 2.0 * kPi * subcarrier_frequency(cfg, m) / cfg.lightspeed_mps;
    const std::complex<double> g = path_gain(cfg, r, m) * inv_sqrt_n * pilot;
    p.d_range[m - 1] = g * (j * k * s(m - 1, 1) - s(m - 1, 0) / r);
    p.d_angle[m - 1] = g * j * k * s(m - 1, 2);
  }
  return p;
}

CVector d_u_d_range(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, std::complex<double> pilot) {
  return signal_derivatives(cfg, pos, vr, plan, pilot).d_range;
}

CVector d_u_d_angle(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, std::complex<double> pilot) {
  return signal_derivatives(cfg, pos, vr, plan, pilot).d_angle;
}

Eigen::Matrix2d fim_from_partials(const SignalPartials& p, double noise_var) {
  if (!(noise_var > 0.0)) throw ConfigError("FIM requires a positive noise variance");
  Eigen::Matrix2d f;
  f(0, 0) = p.d_range.squaredNorm();
  f(1, 1) = p.d_angle.squaredNorm();
  f(0, 1) = f(1, 0) = p.d_range.dot(p.d_angle).real();
  return (2.0 / noise_var) * f;
}

Eigen::Matrix2d fim_from_partials(const SignalPartials& p, const RVector& noise_vars) {
  if (noise_vars.size() != p.d_range.size()) throw ConfigError("noise variance vector length mismatch");
  if (!(noise_vars.array() > 0.0).all()) throw ConfigError("FIM requires positive noise variances");
  const RVector w = 2.0 / noise_vars.array();
  Eigen::Matrix2d f;
  f(0, 0) = (w.array() * p.d_range.cwiseAbs2().array()).sum();
  f(1, 1) = (w.array() * p.d_angle.cwiseAbs2().array()).sum();
  f(0, 1) = f(1, 0) =
      (w.cast<std::complex<double>>().array() * p.d_range.conjugate().array() * p.d_angle.array())
          .sum()
          .real();
  return f;
}

Eigen::Matrix2d fim(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, double noise_var) {
  return fim_from_partials(signal_derivatives(cfg, pos, vr, plan), noise_var);
}

CrbResult crb_from_fim(const Eigen::Matrix2d& f) {
  if (!f.allFinite()) throw SingularFimError("FIM has non-finite entries");
  const double det = f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0);
  if (!(det > 0.0)) throw SingularFimError("FIM determinant is not positive");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(f, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()[0], hi = eig.eigenvalues()[1];
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    throw SingularFimError("FIM is ill-conditioned (condition number above 1e12)");
  }
  CrbResult out;
  out.fim = f;
  out.crb_range = f(1, 1) / det;
  out.crb_angle = f(0, 0) / det;
  return out;
}

CrbResult crb(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
              const BeamPlan& plan, double noise_var) {
  SignalPartials p = signal_derivatives(cfg, pos, vr, plan);
  CrbResult out = crb_from_fim(fim_from_partials(p, noise_var));
  out.partials = std::move(p);
  return out;
}

CrbResult crb(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
              const BeamPlan& plan, const RVector& noise_vars) {
  SignalPartials p = signal_derivatives(cfg, pos, vr, plan);
  CrbResult out = crb_from_fim(fim_from_partials(p, noise_vars));
  out.partials = std::move(p);
  return out;
}

}  // namespace cbsloc
