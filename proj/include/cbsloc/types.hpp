#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace cbsloc {

template <typename Scalar>
using CVec = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CVector = CVec<double>;
using RVector = RVec<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

// All stochastic parts of the simulator draw from this engine.
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLightspeed = 299792458.0;

template <typename Scalar>
constexpr Scalar deg2rad(Scalar deg) {
  return deg * Scalar(std::numbers::pi) / Scalar(180);
}
template <typename Scalar>
constexpr Scalar rad2deg(Scalar rad) {
  return rad * Scalar(180) / Scalar(std::numbers::pi);
}

/// Raised for invalid configuration values and violated preconditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a Fisher information matrix cannot be inverted reliably.
class SingularFimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Polar position (r, theta) relative to the array center; theta is measured
/// from broadside.
struct PolarPosition {
  double range_m = 1.0;
  double angle_rad = 0.0;

  void validate() const;
  double x() const;
  double y() const;
};

/// Independent stream for (master seed, a, b) so that trials and sweeps never
/// share random state.
Rng make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

}  // namespace cbsloc
