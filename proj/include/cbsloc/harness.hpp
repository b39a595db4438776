#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbsloc/crb.hpp"
#include "cbsloc/localization.hpp"

namespace cbsloc {

struct PositionLaw {
  enum class Kind { kFixed, kUniform };
  Kind kind = Kind::kUniform;
  PolarPosition fixed{15.0, 0.0};
  double r_lo = 5.0, r_hi = 50.0;
  double theta_lo = -kPi / 3, theta_hi = kPi / 3;

  static PositionLaw at(const PolarPosition& p) { return {Kind::kFixed, p}; }
  static PositionLaw uniform_over(const SearchRegion& region);
  PolarPosition sample(Rng& rng) const;
  std::string describe() const;
};

struct VrLaw {
  enum class Kind { kStationary, kFixed, kRandom };
  Kind kind = Kind::kStationary;
  VisibilityRegion fixed;
  int n_subarrays = 4;  // used by kRandom

  /// kRandom: uniform over the 2^Ns - 1 non-empty subsets.
  VisibilityRegion sample(Rng& rng) const;
  std::string describe() const;
};

enum class EstimatorKind { kCbs, kCbsBt, kExternal };
std::string to_string(EstimatorKind k);
EstimatorKind estimator_from_string(const std::string& s);

struct ExperimentSpec {
  SystemConfig cfg;
  SearchRegion region;
  std::vector<double> snr_grid_db{10.0, 20.0, 30.0};
  int n_trials = 100;
  PositionLaw position_law;
  VrLaw vr_law;
  EstimatorKind estimator = EstimatorKind::kCbsBt;
  CbsBtParams params;
  std::uint64_t seed = 1;
  int threads = 1;
  bool with_crb = false;
  bool per_subcarrier_snr = false;

  void validate() const;
};

/// Everything a trial estimator may use. The link is fresh for each call.
struct TrialContext {
  const ExperimentSpec* spec = nullptr;
  int trial = 0;
  int snr_index = 0;
  double snr_db = 0.0;
  PolarPosition ue;
  VisibilityRegion vr;
  RVector noise_vars;

  SimulatedLink make_link() const;
};

using TrialEstimator = std::function<PolarPosition(const TrialContext&)>;

struct RmseRow {
  double snr_db = 0.0;
  int n_ok = 0;
  int n_failed = 0;
  double rmse_angle = 0.0;  // rad
  double rmse_range = 0.0;  // m
  double rmse_2d = 0.0;     // m
  bool has_crb = false;
  int n_crb_singular = 0;
  double root_crb_angle = 0.0;  // mean of per-trial root bounds
  double root_crb_range = 0.0;
  double mean_crb_angle = 0.0;  // mean of per-trial bounds, comparable to MSE
  double mean_crb_range = 0.0;
};

struct RmseReport {
  std::string estimator;
  std::string position_mode;
  std::vector<RmseRow> rows;

  void write_csv(std::ostream& os) const;
  void write_csv(const std::string& path) const;
};

/// Builds the trial context (position, VR, noise calibrated on the angle sweep)
/// for every (trial, snr) pair and runs `estimator` on it.
RmseReport monte_carlo(const ExperimentSpec& spec, const TrialEstimator& estimator,
                       const std::string& name);
/// Dispatches on spec.estimator (kCbs or kCbsBt).
RmseReport monte_carlo(const ExperimentSpec& spec);

struct CrbSweepSpec {
  SystemConfig cfg;
  SearchRegion region;
  std::vector<double> snr_grid_db{10.0, 20.0, 30.0};
  std::vector<int> subcarrier_counts{2048};
  std::vector<double> bandwidths_hz{6e9};
  std::vector<VisibilityRegion> vr_cases{VisibilityRegion::stationary(4)};
  PositionLaw position_law;
  int n_positions = 16;  // ignored for a fixed position
  std::uint64_t seed = 1;
  int threads = 1;
  bool per_subcarrier_snr = false;

  void validate() const;
};

struct CrbRow {
  double snr_db = 0.0;
  int n_subcarriers = 0;
  double bandwidth_hz = 0.0;
  bool stationary = true;
  std::string visible;
  double root_crb_theta_rad = 0.0;
  double root_crb_r_m = 0.0;
  std::string position_mode;
  int n_positions = 0;
  int n_singular = 0;
};

/// Bounds under the angle-sweep excitation, averaged (root values) over positions.
std::vector<CrbRow> crb_sweep(const CrbSweepSpec& spec);
void write_crb_csv(std::ostream& os, const std::vector<CrbRow>& rows);
void write_crb_csv(const std::string& path, const std::vector<CrbRow>& rows);

/// Scores an external predictions CSV (sample_id, r_hat_m, theta_hat_rad)
/// against an exported labels CSV, one row per SNR. Missing predictions count
/// as failed trials.
RmseReport score_predictions(const std::string& labels_csv, const std::string& predictions_csv);

/// Splits on commas; no quoting.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cbsloc
