#pragma once

#include <string>
#include <utility>

#include "cbsloc/harness.hpp"

namespace cbsloc {

/// Factor pair (M1, M2) with M1 * M2 = M, M1 > M2 and M1 - M2 minimal.
/// Throws when M has no such pair (M < 2, or a perfect square with no other split).
std::pair<int, int> factor_pair(int m);

/// Row-major M -> M1 x M2 and back.
RMatrix reshape_frame(const RVector& values, int m1, int m2);
RVector unreshape_frame(const RMatrix& mat);

/// Scales applied before writing; every channel is divided by its scale.
struct Normalization {
  double y1_max_abs = 1.0;
  double y2_max_abs = 1.0;
  double theta_scale_rad = 1.0;
  double range_scale_m = 1.0;
};

/// Channels: |y^1|, |y^2| reshaped, then constant fills of theta_hat and r_hat.
struct DatasetSample {
  int m1 = 0, m2 = 0;
  std::vector<RMatrix> channels;  // 4 entries, each m1 x m2
};

DatasetSample reshape_observations(const ReceivedFrame& angle_frame,
                                   const ReceivedFrame& distance_frame, double theta_hat,
                                   double r_hat, int m1, int m2, const Normalization& norm = {});

/// Writes <dir>/manifest.json, <dir>/<split>.f32 and <dir>/<split>_labels.csv.
/// Sample i cycles through spec.snr_grid_db and draws position and VR from the
/// spec laws; observations come from the two-sweep baseline. Splits exported
/// after the first reuse that split's normalization.
void export_dataset(const ExperimentSpec& spec, int count, const std::string& dir,
                    const std::string& split = "train");

}  // namespace cbsloc
