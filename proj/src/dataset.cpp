#include "cbsloc/dataset.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "parallel.hpp"

namespace cbsloc {

namespace fs = std::filesystem;
using nlohmann::json;

std::pair<int, int> factor_pair(int m) {
  if (m < 2) throw ConfigError("factor_pair needs M >= 2");
  for (int m2 = static_cast<int>(std::sqrt(double(m))); m2 >= 1; --m2) {
    if (m % m2 == 0 && m / m2 > m2) return {m / m2, m2};
  }
  throw ConfigError("no factor pair with M1 > M2 for M = " + std::to_string(m));
}

RMatrix reshape_frame(const RVector& values, int m1, int m2) {
  if (m1 < 1 || m2 < 1 || values.size() != Eigen::Index(m1) * m2) {
    throw ConfigError("reshape needs M1 * M2 == frame length");
  }
  RMatrix out(m1, m2);
  for (int i = 0; i < m1; ++i)
    for (int j = 0; j < m2; ++j) out(i, j) = values[i * m2 + j];
  return out;
}

RVector unreshape_frame(const RMatrix& mat) {
  RVector out(mat.size());
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j) out[i * mat.cols() + j] = mat(i, j);
  return out;
}

DatasetSample reshape_observations(const ReceivedFrame& angle_frame,
                                   const ReceivedFrame& distance_frame, double theta_hat,
                                   double r_hat, int m1, int m2, const Normalization& norm) {
  if (angle_frame.samples.size() != distance_frame.samples.size()) {
    throw ConfigError("frames differ in length");
  }
  DatasetSample s;
  s.m1 = m1;
  s.m2 = m2;
  s.channels.push_back(reshape_frame(angle_frame.samples.cwiseAbs() / norm.y1_max_abs, m1, m2));
  s.channels.push_back(reshape_frame(distance_frame.samples.cwiseAbs() / norm.y2_max_abs, m1, m2));
  s.channels.push_back(RMatrix::Constant(m1, m2, theta_hat / norm.theta_scale_rad));
  s.channels.push_back(RMatrix::Constant(m1, m2, r_hat / norm.range_scale_m));
  return s;
}

namespace {

struct RawSample {
  PolarPosition ue;
  VisibilityRegion vr;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  LocalizationEstimate est;
};

RawSample simulate_sample(const ExperimentSpec& spec, const BeamPlan& sweep, int i) {
  RawSample s;
  s.seed = make_stream(spec.seed, static_cast<std::uint64_t>(i), 0xD5)();
  Rng draw = make_stream(s.seed, 0);
  s.ue = spec.position_law.sample(draw);
  s.vr = spec.vr_law.sample(draw);
  s.snr_db = spec.snr_grid_db[i % spec.snr_grid_db.size()];
  const CVector u = noiseless_signal(spec.cfg, s.ue, s.vr, sweep);
  const double snr = db_to_linear(s.snr_db);
  RVector nv = spec.per_subcarrier_snr
                   ? noise_vars_per_subcarrier(u, snr)
                   : RVector::Constant(spec.cfg.n_subcarriers, noise_var_for_snr(u, snr));
  SimulatedLink link(spec.cfg, s.ue, s.vr, nv, s.seed, 1, 0);
  s.est = cbs(spec.region, link, spec.params.convention);
  return s;
}

void append_le_floats(std::ofstream& os, const std::vector<float>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  } else {
    for (float f : data) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

std::string vr_string(const VisibilityRegion& vr) {
  std::string s;
  for (std::size_t k = 0; k < vr.visible.size(); ++k) s += (k ? ";" : "") + std::to_string(vr.visible[k]);
  return s;
}

json normalization_json(const Normalization& n) {
  return {{"y1_max_abs", n.y1_max_abs},
          {"y2_max_abs", n.y2_max_abs},
          {"theta_scale_rad", n.theta_scale_rad},
          {"range_scale_m", n.range_scale_m}};
}

}  // namespace

void export_dataset(const ExperimentSpec& spec, int count, const std::string& dir,
                    const std::string& split) {
  if (count < 0) throw ConfigError("count must be non-negative");
  if (split.empty() || split.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("split name must be a plain file stem");
  }
  ExperimentSpec run = spec;
  run.estimator = EstimatorKind::kCbs;
  run.n_trials = std::max(1, run.n_trials);
  run.validate();
  const auto [m1, m2] = factor_pair(run.cfg.n_subcarriers);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.json";

  json manifest;
  std::optional<Normalization> inherited;
  std::string inherited_from;
  if (fs::exists(manifest_path)) {
    std::ifstream is(manifest_path);
    try {
      manifest = json::parse(is);
    } catch (const std::exception& e) {
      throw std::runtime_error(manifest_path.string() + ": unreadable manifest: " + e.what());
    }
    if (manifest.contains("splits")) {
      for (auto& [name, entry] : manifest["splits"].items()) {
        if (name == split || inherited) continue;
        if (entry.value("normalization_source", name) != name) continue;
        const json& n = entry.at("normalization");
        inherited = Normalization{n.at("y1_max_abs"), n.at("y2_max_abs"), n.at("theta_scale_rad"),
                                  n.at("range_scale_m")};
        inherited_from = name;
      }
    }
  }

  const BeamPlan sweep = trajectory_plan(run.cfg, angle_sweep_trajectory(run.region), run.params.convention);

  Normalization norm;
  norm.theta_scale_rad = std::max(std::abs(run.region.theta_min), std::abs(run.region.theta_max));
  norm.range_scale_m = run.region.r_max;
  if (inherited) {
    norm = *inherited;
  } else {
    // first pass: dataset-wide max-abs of each observation channel
    std::vector<std::pair<double, double>> peaks(count);
    detail::parallel_for(count, run.threads, [&](int i) {
      const RawSample s = simulate_sample(run, sweep, i);
      peaks[i] = {s.est.frames[0].samples.cwiseAbs().maxCoeff(),
                  s.est.frames[1].samples.cwiseAbs().maxCoeff()};
    });
    double p1 = 0.0, p2 = 0.0;
    for (const auto& [a, b] : peaks) {
      p1 = std::max(p1, a);
      p2 = std::max(p2, b);
    }
    norm.y1_max_abs = p1 > 0.0 ? p1 : 1.0;
    norm.y2_max_abs = p2 > 0.0 ? p2 : 1.0;
  }

  const std::string tensor_name = split + ".f32";
  const std::string labels_name = split + "_labels.csv";
  std::ofstream tensor(root / tensor_name, std::ios::binary | std::ios::trunc);
  std::ofstream labels(root / labels_name, std::ios::trunc);
  if (!tensor || !labels) throw std::runtime_error("cannot open dataset files in " + dir);
  labels << "sample_id,r_m,theta_rad,snr_db,seed,vr,cbs_r_hat_m,cbs_theta_hat_rad\n"
         << std::setprecision(17);

  // second pass in fixed-size blocks keeps memory bounded and output ordered
  const int block = 256;
  for (int start = 0; start < count; start += block) {
    const int n = std::min(block, count - start);
    std::vector<RawSample> samples(n);
    detail::parallel_for(n, run.threads,
                         [&](int k) { samples[k] = simulate_sample(run, sweep, start + k); });
    for (int k = 0; k < n; ++k) {
      const RawSample& s = samples[k];
      const DatasetSample d = reshape_observations(s.est.frames[0], s.est.frames[1], s.est.angle_rad,
                                                   s.est.range_m, m1, m2, norm);
      std::vector<float> flat;
      flat.reserve(4 * m1 * m2);
      for (const RMatrix& ch : d.channels)
        for (int i = 0; i < m1; ++i)
          for (int j = 0; j < m2; ++j) flat.push_back(static_cast<float>(ch(i, j)));
      append_le_floats(tensor, flat);
      labels << start + k << ',' << s.ue.range_m << ',' << s.ue.angle_rad << ',' << s.snr_db << ','
             << s.seed << ',' << vr_string(s.vr) << ',' << s.est.range_m << ',' << s.est.angle_rad
             << '\n';
    }
  }
  tensor.close();
  labels.close();
  if (!tensor || !labels) throw std::runtime_error("write failed in " + dir);

  manifest["format"] = "cbsloc-dataset";
  manifest["format_version"] = 1;
  manifest["config"] = {{"n_antennas", run.cfg.n_antennas},
                        {"carrier_hz", run.cfg.carrier_hz},
                        {"bandwidth_hz", run.cfg.bandwidth_hz},
                        {"n_subcarriers", run.cfg.n_subcarriers},
                        {"spacing_m", run.cfg.spacing_m},
                        {"lightspeed_mps", run.cfg.lightspeed_mps}};
  manifest["region"] = {{"r_min_m", run.region.r_min},
                        {"r_max_m", run.region.r_max},
                        {"theta_min_rad", run.region.theta_min},
                        {"theta_max_rad", run.region.theta_max}};
  manifest["layout"] = {
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"order", "sample, channel, row, col (row-major)"},
      {"channels", {"abs_y_angle_sweep", "abs_y_distance_sweep", "theta_hat_fill", "r_hat_fill"}},
      {"channels_rule", "2 * sweeps + 2"},
      {"m1", m1},
      {"m2", m2}};
  manifest["labels"] = {{"columns", {"sample_id", "r_m", "theta_rad", "snr_db", "seed", "vr",
                                     "cbs_r_hat_m", "cbs_theta_hat_rad"}},
                        {"label_scale", {{"r_m", norm.range_scale_m}, {"theta_rad", norm.theta_scale_rad}}}};
  json entry;
  entry["count"] = count;
  entry["shape"] = {count, 4, m1, m2};
  entry["tensor_file"] = tensor_name;
  entry["labels_file"] = labels_name;
  entry["seed"] = run.seed;
  entry["snr_grid_db"] = run.snr_grid_db;
  entry["position_law"] = run.position_law.describe();
  entry["vr_law"] = run.vr_law.describe();
  entry["snr_convention"] = run.per_subcarrier_snr ? "per_subcarrier" : "frame_average";
  entry["bandwidth_convention"] =
      run.params.convention == BandwidthConvention::kSpanned ? "spanned" : "nominal";
  entry["normalization"] = normalization_json(norm);
  entry["normalization_source"] = inherited ? inherited_from : split;
  manifest["splits"][split] = entry;

  std::ofstream os(manifest_path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + manifest_path.string());
  os << manifest.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed for " + manifest_path.string());
}

}  // namespace cbsloc
