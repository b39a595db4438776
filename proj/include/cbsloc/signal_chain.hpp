#pragma once

#include <iosfwd>
#include <string>

#include "cbsloc/beamforming.hpp"

namespace cbsloc {

struct ReceivedFrame {
  CVector samples;
  double noise_var = 0.0;
  std::complex<double> pilot{1.0, 0.0};
};

/// Row m-1, column k: sum_n coeffs(n, k) * exp(j2pi (f_m r_n / c - phi_n - (f_m - base) t_n)),
/// where r_n are the Taylor distances to `pos`. The phase is affine in m inside each
/// beam segment, so each antenna advances by a fixed complex step per subcarrier.
CMatrix phasor_sums(const SystemConfig& cfg, const PolarPosition& pos, const BeamPlan& plan,
                    const RMatrix& coeffs);

/// u_m = h_m^H w_m * pilot.
CVector noiseless_signal(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const BeamPlan& plan,
                         std::complex<double> pilot = 1.0);
/// Same quantity from explicit N x M weights, built from channel() directly.
CVector noiseless_signal(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const CMatrix& weights,
                         std::complex<double> pilot = 1.0);

/// Circularly symmetric complex Gaussian noise, E|n|^2 = noise_var.
ReceivedFrame add_noise(const CVector& u, double noise_var, Rng& rng,
                        std::complex<double> pilot = 1.0);
ReceivedFrame add_noise(const CVector& u, double noise_var, std::uint64_t seed,
                        std::complex<double> pilot = 1.0);
/// Per-subcarrier variances; the frame records their mean.
ReceivedFrame add_noise(const CVector& u, const RVector& noise_vars, Rng& rng,
                        std::complex<double> pilot = 1.0);

/// sigma^2 = mean_m |u_m|^2 / snr.
double noise_var_for_snr(const CVector& u, double snr_linear);
double noise_var_for_snr(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const BeamPlan& plan, double snr_linear);
/// sigma_m^2 = |u_m|^2 / snr, equal SNR on every subcarrier.
RVector noise_vars_per_subcarrier(const CVector& u, double snr_linear);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

void write_frame_csv(std::ostream& os, const ReceivedFrame& frame);
void write_frame_csv(const std::string& path, const ReceivedFrame& frame);
/// Reads columns m,re,im; noise_var is not stored and comes back as 0.
ReceivedFrame read_frame_csv(std::istream& is);
ReceivedFrame read_frame_csv(const std::string& path);

}  // namespace cbsloc
