#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "cbsloc/dataset.hpp"

using namespace cbsloc;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny() {
  ExperimentSpec s;
  s.cfg = SystemConfig::make(32, 100e9, 6e9, 128);
  s.snr_grid_db = {5.0, 25.0};
  s.vr_law.kind = VrLaw::Kind::kRandom;
  s.seed = 17;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

nlohmann::json manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.json");
  return nlohmann::json::parse(is);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cbsloc_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("factor pairs") {
  CHECK(factor_pair(2048) == std::pair<int, int>{64, 32});
  CHECK(factor_pair(16) == std::pair<int, int>{8, 2});
  CHECK(factor_pair(7) == std::pair<int, int>{7, 1});
  CHECK(factor_pair(128) == std::pair<int, int>{16, 8});
  CHECK(factor_pair(2) == std::pair<int, int>{2, 1});
  CHECK_THROWS_AS(factor_pair(1), ConfigError);
}

TEST_CASE("reshape is row-major and invertible") {
  RVector v(6);
  v << 0, 1, 2, 3, 4, 5;
  const RMatrix m = reshape_frame(v, 3, 2);
  CHECK(m(0, 1) == 1.0);
  CHECK(m(2, 0) == 4.0);
  CHECK(unreshape_frame(m) == v);
  CHECK_THROWS_AS(reshape_frame(v, 4, 2), ConfigError);
}

TEST_CASE("observation channels") {
  ReceivedFrame a, b;
  a.samples = CVector::Constant(8, std::complex<double>(3.0, 4.0));
  b.samples = CVector::Zero(8);
  Normalization n;
  n.y1_max_abs = 10.0;
  n.theta_scale_rad = 2.0;
  n.range_scale_m = 50.0;
  const DatasetSample s = reshape_observations(a, b, 0.5, 25.0, 4, 2, n);
  REQUIRE(s.channels.size() == 4);
  CHECK(s.channels[0](3, 1) == Approx(0.5));
  CHECK(s.channels[1].isZero());
  CHECK(s.channels[2](0, 0) == 0.25);
  CHECK(s.channels[3](1, 1) == 0.5);
  b.samples = CVector::Zero(4);
  CHECK_THROWS_AS(reshape_observations(a, b, 0, 0, 4, 2), ConfigError);
}

TEST_CASE("empty export still writes a manifest") {
  const fs::path dir = scratch("ds_empty");
  ExperimentSpec s = tiny();
  s.cfg = SystemConfig::make(32, 100e9, 6e9, 2048);
  export_dataset(s, 0, dir.string());
  const auto j = manifest(dir);
  CHECK(j["splits"]["train"]["shape"] == nlohmann::json({0, 4, 64, 32}));
  CHECK(fs::file_size(dir / "train.f32") == 0);
  fs::remove_all(dir);
}

TEST_CASE("export is reproducible and sized as declared") {
  const fs::path a = scratch("ds_a"), b = scratch("ds_b");
  export_dataset(tiny(), 6, a.string());
  ExperimentSpec threaded = tiny();
  threaded.threads = 2;
  export_dataset(threaded, 6, b.string());
  CHECK(fs::file_size(a / "train.f32") == 6u * 4 * 16 * 8 * sizeof(float));
  CHECK(slurp(a / "train.f32") == slurp(b / "train.f32"));
  CHECK(slurp(a / "train_labels.csv") == slurp(b / "train_labels.csv"));

  const auto j = manifest(a);
  CHECK(j["layout"]["m1"] == 16);
  CHECK(j["layout"]["m2"] == 8);
  CHECK(j["splits"]["train"]["normalization_source"] == "train");

  // the observation channels are max-normalized over the split
  std::ifstream is(a / "train.f32", std::ios::binary);
  std::vector<float> data(6 * 4 * 128);
  is.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * sizeof(float)));
  float peak1 = 0.0f;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 128; ++k) peak1 = std::max(peak1, data[i * 512 + k]);
  CHECK(peak1 == Approx(1.0f));

  std::ifstream labels(a / "train_labels.csv");
  std::string header, first;
  std::getline(labels, header);
  std::getline(labels, first);
  CHECK(header == "sample_id,r_m,theta_rad,snr_db,seed,vr,cbs_r_hat_m,cbs_theta_hat_rad");
  const auto cells = split_csv_line(first);
  CHECK(cells[0] == "0");
  CHECK(std::stod(cells[3]) == 5.0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("later splits inherit the first split's normalization") {
  const fs::path dir = scratch("ds_split");
  export_dataset(tiny(), 4, dir.string(), "train");
  ExperimentSpec other = tiny();
  other.seed = 99;
  export_dataset(other, 3, dir.string(), "val");
  const auto j = manifest(dir);
  CHECK(j["splits"]["val"]["normalization_source"] == "train");
  CHECK(j["splits"]["val"]["normalization"] == j["splits"]["train"]["normalization"]);
  CHECK(j["splits"]["val"]["count"] == 3);
  CHECK(fs::exists(dir / "val_labels.csv"));
  CHECK_THROWS_AS(export_dataset(tiny(), 1, dir.string(), "../x"), ConfigError);
  CHECK_THROWS_AS(export_dataset(tiny(), -1, dir.string()), ConfigError);
  fs::remove_all(dir);
}
