#pragma once

#include <Eigen/Core>

#include "cbsloc/signal_chain.hpp"

namespace cbsloc {

struct SignalPartials {
  CVector d_range;  // xi
  CVector d_angle;  // zeta
};

struct CrbResult {
  double crb_range = 0.0;  // m^2
  double crb_angle = 0.0;  // rad^2
  Eigen::Matrix2d fim = Eigen::Matrix2d::Zero();
  SignalPartials partials;

  double root_crb_range() const { return std::sqrt(crb_range); }
  double root_crb_angle() const { return std::sqrt(crb_angle); }
};

/// Partials of the noiseless signal (unit pilot) with respect to range and angle.
SignalPartials signal_derivatives(const SystemConfig& cfg, const PolarPosition& pos,
                                  const VisibilityRegion& vr, const BeamPlan& plan,
                                  std::complex<double> pilot = 1.0);
CVector d_u_d_range(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, std::complex<double> pilot = 1.0);
CVector d_u_d_angle(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, std::complex<double> pilot = 1.0);

/// (2 / sigma^2) [[xi^H xi, Re xi^H zeta], [Re xi^H zeta, zeta^H zeta]].
Eigen::Matrix2d fim_from_partials(const SignalPartials& p, double noise_var);
/// Subcarrier-dependent noise: each term weighted by 2 / sigma_m^2.
Eigen::Matrix2d fim_from_partials(const SignalPartials& p, const RVector& noise_vars);

Eigen::Matrix2d fim(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
                    const BeamPlan& plan, double noise_var);

/// Throws SingularFimError when det <= 0 or the condition number exceeds 1e12.
CrbResult crb_from_fim(const Eigen::Matrix2d& fim);

/// Convenience: partials, FIM and bound in one call.
CrbResult crb(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
              const BeamPlan& plan, double noise_var);
CrbResult crb(const SystemConfig& cfg, const PolarPosition& pos, const VisibilityRegion& vr,
              const BeamPlan& plan, const RVector& noise_vars);

}  // namespace cbsloc
