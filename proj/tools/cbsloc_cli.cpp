// cbsloc: command-line front end for the simulator.
//
// Every subcommand accepts --config <file> (key = value scenario, see
// config_file.hpp), --seed, --out and --threads. Scenario flags given on the
// command line override the file.

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "cbsloc/config_file.hpp"
#include "cbsloc/crb.hpp"
#include "cbsloc/dataset.hpp"
#include "cbsloc/harness.hpp"
#include "cbsloc/localization.hpp"

using namespace cbsloc;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad number '" + s + "' in " + what);
}

// "r,theta_deg"
PolarPosition parse_position(const std::string& s, const std::string& what) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError(what + " expects r_m,theta_deg");
  PolarPosition p{to_double(parts[0], what), deg2rad(to_double(parts[1], what))};
  p.validate();
  return p;
}

// "1,2" -> {1, 2}
std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    const double v = to_double(p, what);
    if (v != std::floor(v)) throw ConfigError(what + ": not an integer: " + p);
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out;
  int threads = 1;

  int n_antennas = 0;
  int n_subcarriers = 0;
  double carrier_hz = 0.0, bandwidth_hz = 0.0;
  double r_min = 0.0, r_max = 0.0, theta_min_deg = 0.0, theta_max_deg = 0.0;
  int n_subarrays = 0;
  std::string visible;
  bool literal_b = false;

  std::vector<CLI::Option*> opts;  // scenario overrides, indexed by given()

  void attach(CLI::App* app) {
    app->add_option("--config", config, "scenario file (key = value)")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "master seed")->capture_default_str();
    app->add_option("--out", out, "output path (stdout when omitted)");
    app->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    opts = {app->add_option("--n-antennas", n_antennas, "N"),
            app->add_option("--n-subcarriers", n_subcarriers, "M"),
            app->add_option("--carrier-hz", carrier_hz, "f_c"),
            app->add_option("--bandwidth-hz", bandwidth_hz, "B"),
            app->add_option("--r-min", r_min, "search region r_min (m)"),
            app->add_option("--r-max", r_max, "search region r_max (m)"),
            app->add_option("--theta-min-deg", theta_min_deg, "search region theta_min (deg)"),
            app->add_option("--theta-max-deg", theta_max_deg, "search region theta_max (deg)"),
            app->add_option("--n-subarrays", n_subarrays, "visibility sub-array count"),
            app->add_option("--visible", visible, "visible sub-arrays, e.g. 1,2")};
    app->add_flag("--literal-b", literal_b, "use B instead of f_M - f_1 as the TTD slope denominator");
  }

  bool given(std::size_t i) const { return opts[i]->count() > 0; }

  ScenarioConfig scenario() const {
    ScenarioConfig sc = config.empty() ? ScenarioConfig{} : load_scenario(config);
    SystemConfig& s = sc.system;
    const bool carrier_changed = given(2);
    if (given(0)) s.n_antennas = n_antennas;
    if (given(1)) s.n_subcarriers = n_subcarriers;
    if (carrier_changed) {
      s.carrier_hz = carrier_hz;
      s.spacing_m = s.lightspeed_mps / s.carrier_hz / 2;
    }
    if (given(3)) s.bandwidth_hz = bandwidth_hz;
    s.validate();
    if (given(4)) sc.region.r_min = r_min;
    if (given(5)) sc.region.r_max = r_max;
    if (given(6)) sc.region.theta_min = deg2rad(theta_min_deg);
    if (given(7)) sc.region.theta_max = deg2rad(theta_max_deg);
    sc.region.validate();
    if (given(8) || given(9)) {
      const int ns = given(8) ? n_subarrays : std::max(sc.visibility.n_subarrays, 4);
      sc.visibility = given(9) ? VisibilityRegion{ns, parse_int_list(visible, "--visible")}
                               : VisibilityRegion::stationary(ns);
    }
    sc.visibility.validate_for(s);
    return sc;
  }

  BandwidthConvention convention() const {
    return literal_b ? BandwidthConvention::kNominal : BandwidthConvention::kSpanned;
  }

  // Runs `emit` against the --out file or stdout.
  template <class F>
  void write(F&& emit) const {
    if (out.empty()) {
      emit(std::cout);
      std::cout.flush();
      return;
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open " + out + " for writing");
    emit(os);
    if (!os) throw std::runtime_error("write failed for " + out);
  }
};

struct BtFlags {
  CbsBtParams params;
  void attach(CLI::App* app) {
    app->add_option("--groups-angle", params.groups_angle, "L")->capture_default_str();
    app->add_option("--groups-distance", params.groups_distance, "L2")->capture_default_str();
    app->add_option("--max-iters", params.max_iters, "J")->capture_default_str();
    app->add_option("--stop-threshold-m", params.stop_threshold_m, "epsilon (m)")->capture_default_str();
    app->add_flag("--refine-at-rmin", refine_at_rmin, "focus stage-II groups at r_min");
  }
  bool refine_at_rmin = false;
  CbsBtParams resolved(BandwidthConvention conv) const {
    CbsBtParams p = params;
    p.convention = conv;
    if (refine_at_rmin) p.refine_focus = AngleRefineFocus::kMinRange;
    return p;
  }
};

// --------------------------------------------------------------------------

struct MonteCarloCmd {
  Common common;
  BtFlags bt;
  std::string estimator = "cbs-bt";
  int trials = 100;
  std::vector<double> snr_db{10.0, 20.0, 30.0};
  std::string position = "random";
  std::string vr_law = "config";
  bool with_crb = false;
  bool per_subcarrier_snr = false;
  std::string labels, predictions;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("monte-carlo", "RMSE over random trials (or score external predictions)");
    common.attach(app);
    bt.attach(app);
    app->add_option("--estimator", estimator, "cbs | cbs-bt | external")->capture_default_str();
    app->add_option("--trials", trials, "trials per SNR")->capture_default_str();
    app->add_option("--snr-db", snr_db, "SNR grid (dB)")->delimiter(',');
    app->add_option("--position", position, "'random' (uniform over the region) or r_m,theta_deg")
        ->capture_default_str();
    app->add_option("--vr-law", vr_law, "config | random")->capture_default_str();
    app->add_flag("--with-crb", with_crb, "add CRB columns");
    app->add_flag("--per-subcarrier-snr", per_subcarrier_snr, "SNR per subcarrier instead of frame average");
    app->add_option("--labels", labels, "labels CSV (external)");
    app->add_option("--predictions", predictions, "predictions CSV (external)");
    app->callback([this] { run(); });
  }

  void run() {
    const EstimatorKind kind = estimator_from_string(estimator);
    RmseReport report;
    if (kind == EstimatorKind::kExternal) {
      if (labels.empty() || predictions.empty()) {
        throw ConfigError("--estimator external needs --labels and --predictions");
      }
      report = score_predictions(labels, predictions);
    } else {
      report = monte_carlo(spec(kind));
    }
    common.write([&](std::ostream& os) { report.write_csv(os); });
  }

  ExperimentSpec spec(EstimatorKind kind) const {
    const ScenarioConfig sc = common.scenario();
    ExperimentSpec s;
    s.cfg = sc.system;
    s.region = sc.region;
    s.snr_grid_db = snr_db;
    s.n_trials = trials;
    s.position_law = position == "random" ? PositionLaw::uniform_over(sc.region)
                                          : PositionLaw::at(parse_position(position, "--position"));
    if (vr_law == "random") {
      s.vr_law.kind = VrLaw::Kind::kRandom;
      s.vr_law.n_subarrays = std::max(sc.visibility.n_subarrays, 4);
    } else if (vr_law == "config") {
      s.vr_law.kind = sc.visibility.is_stationary() ? VrLaw::Kind::kStationary : VrLaw::Kind::kFixed;
      s.vr_law.fixed = sc.visibility;
      s.vr_law.n_subarrays = sc.visibility.n_subarrays;
    } else {
      throw ConfigError("--vr-law must be config or random");
    }
    s.estimator = kind;
    s.params = bt.resolved(common.convention());
    s.seed = common.seed;
    s.threads = common.threads;
    s.with_crb = with_crb;
    s.per_subcarrier_snr = per_subcarrier_snr;
    return s;
  }
};

struct CrbSweepCmd {
  Common common;
  std::vector<double> snr_db{10.0, 20.0, 30.0};
  std::vector<int> m_list;
  std::vector<double> b_list;
  std::string vr_cases = "config";
  std::string position = "random";
  int positions = 16;
  bool per_subcarrier_snr = false;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("crb-sweep", "root CRB over SNR, M, B and visibility");
    common.attach(app);
    app->add_option("--snr-db", snr_db, "SNR grid (dB)")->delimiter(',');
    app->add_option("--m-list", m_list, "subcarrier counts")->delimiter(',');
    app->add_option("--b-list", b_list, "bandwidths (Hz)")->delimiter(',');
    app->add_option("--vr-cases", vr_cases,
                    "'config', or ':'-separated visible lists over 4 sub-arrays, e.g. 1,2,3,4:1")
        ->capture_default_str();
    app->add_option("--position", position, "'random' or r_m,theta_deg")->capture_default_str();
    app->add_option("--positions", positions, "random positions averaged")->capture_default_str();
    app->add_flag("--per-subcarrier-snr", per_subcarrier_snr, "SNR per subcarrier instead of frame average");
    app->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig sc = common.scenario();
    CrbSweepSpec s;
    s.cfg = sc.system;
    s.region = sc.region;
    s.snr_grid_db = snr_db;
    s.subcarrier_counts = m_list.empty() ? std::vector<int>{sc.system.n_subcarriers} : m_list;
    s.bandwidths_hz = b_list.empty() ? std::vector<double>{sc.system.bandwidth_hz} : b_list;
    if (vr_cases == "config") {
      s.vr_cases = {sc.visibility};
    } else {
      s.vr_cases.clear();
      for (const auto& c : split(vr_cases, ':')) {
        s.vr_cases.push_back({4, parse_int_list(c, "--vr-cases")});
        s.vr_cases.back().validate_for(sc.system);
      }
    }
    s.position_law = position == "random" ? PositionLaw::uniform_over(sc.region)
                                          : PositionLaw::at(parse_position(position, "--position"));
    s.n_positions = positions;
    s.seed = common.seed;
    s.threads = common.threads;
    s.per_subcarrier_snr = per_subcarrier_snr;
    const auto rows = crb_sweep(s);
    common.write([&](std::ostream& os) { write_crb_csv(os, rows); });
  }
};

struct LocalizeCmd {
  Common common;
  BtFlags bt;
  std::string estimator = "cbs-bt";
  std::string ue = "15,0";
  double snr_db = 20.0;
  bool noise_free = false;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("localize", "run one estimator on one UE and print JSON");
    common.attach(app);
    bt.attach(app);
    app->add_option("--estimator", estimator, "cbs | cbs-bt")->capture_default_str();
    app->add_option("--ue", ue, "true position r_m,theta_deg")->capture_default_str();
    app->add_option("--snr-db", snr_db, "frame-average SNR of the angle sweep")->capture_default_str();
    app->add_flag("--noise-free", noise_free, "no receiver noise");
    app->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig sc = common.scenario();
    const PolarPosition p = parse_position(ue, "--ue");
    const BandwidthConvention conv = common.convention();
    const CbsBtParams params = bt.resolved(conv);
    double noise_var = 0.0;
    if (!noise_free) {
      const BeamPlan sweep = trajectory_plan(sc.system, angle_sweep_trajectory(sc.region), conv);
      noise_var = noise_var_for_snr(noiseless_signal(sc.system, p, sc.visibility, sweep), db_to_linear(snr_db));
    }
    SimulatedLink link(sc.system, p, sc.visibility, noise_var, common.seed, 0, 0);
    const EstimatorKind kind = estimator_from_string(estimator);
    if (kind == EstimatorKind::kExternal) throw ConfigError("localize runs cbs or cbs-bt");
    const LocalizationEstimate e =
        kind == EstimatorKind::kCbs ? cbs(sc.region, link, conv) : cbs_bt(sc.region, params, link);

    json j;
    j["estimator"] = to_string(kind);
    j["truth"] = {{"r_m", p.range_m}, {"theta_rad", p.angle_rad}, {"theta_deg", rad2deg(p.angle_rad)}};
    j["estimate"] = {{"r_m", e.range_m}, {"theta_rad", e.angle_rad}, {"theta_deg", rad2deg(e.angle_rad)}};
    j["error"] = {{"r_m", e.range_m - p.range_m}, {"theta_rad", e.angle_rad - p.angle_rad}};
    j["sweeps_used"] = e.sweeps_used;
    j["noise_var"] = noise_var;
    j["snr_db"] = noise_free ? json(nullptr) : json(snr_db);
    j["visible"] = sc.visibility.visible;
    j["n_subarrays"] = sc.visibility.n_subarrays;
    j["seed"] = common.seed;
    json stages = json::array();
    for (const auto& s : e.stages) {
      stages.push_back({{"stage", s.stage},
                        {"max_index", s.max_index},
                        {"theta_rad", s.angle_rad},
                        {"r_m", s.range_m},
                        {"bracket_lo_m", s.bracket_lo_m},
                        {"bracket_hi_m", s.bracket_hi_m}});
    }
    j["stages"] = stages;
    common.write([&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }
};

struct GainMapCmd {
  Common common;
  std::string focus, start, end;
  int m = 0;
  double r_lo = 5.0, r_hi = 50.0, r_step = 0.5;
  double t_lo = -60.0, t_hi = 60.0, t_step = 0.5;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("gainmap", "beam gain |a^H w| over a range/angle grid (CSV)");
    common.attach(app);
    auto* f = app->add_option("--focus", focus, "phase-shifter focus r_m,theta_deg");
    auto* s = app->add_option("--start", start, "TTD trajectory start r_m,theta_deg");
    auto* e = app->add_option("--end", end, "TTD trajectory end r_m,theta_deg");
    f->excludes(s)->excludes(e);
    s->needs(e);
    e->needs(s);
    app->add_option("--m", m, "subcarrier index (default M)");
    app->add_option("--r-lo", r_lo)->capture_default_str();
    app->add_option("--r-hi", r_hi)->capture_default_str();
    app->add_option("--r-step", r_step)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--theta-lo-deg", t_lo)->capture_default_str();
    app->add_option("--theta-hi-deg", t_hi)->capture_default_str();
    app->add_option("--theta-step-deg", t_step)->check(CLI::PositiveNumber)->capture_default_str();
    app->callback([this] { run(); });
  }

  static RVector grid(double lo, double hi, double step) {
    if (!(hi >= lo)) throw ConfigError("grid upper bound below lower bound");
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
    RVector g(n);
    for (int i = 0; i < n; ++i) g[i] = lo + i * step;
    return g;
  }

  void run() {
    const ScenarioConfig sc = common.scenario();
    const SystemConfig& cfg = sc.system;
    BeamPlan plan;
    if (!focus.empty()) {
      plan = ps_beamformer(cfg, parse_position(focus, "--focus"));
    } else if (!start.empty()) {
      plan = trajectory_plan(cfg, {parse_position(start, "--start"), parse_position(end, "--end")},
                             common.convention());
    } else {
      throw ConfigError("gainmap needs --focus or --start/--end");
    }
    const int mm = m == 0 ? cfg.n_subcarriers : m;
    const RVector ranges = grid(r_lo, r_hi, r_step);
    RVector angles = grid(t_lo, t_hi, t_step);
    for (Eigen::Index i = 0; i < angles.size(); ++i) angles[i] = deg2rad(angles[i]);
    const GainMap g = gain_map(cfg, plan_weights(cfg, plan, mm), mm, ranges, angles);
    common.write([&](std::ostream& os) {
      os << "r_m,theta_deg,gain\n" << std::setprecision(10);
      for (Eigen::Index i = 0; i < ranges.size(); ++i)
        for (Eigen::Index j = 0; j < angles.size(); ++j)
          os << ranges[i] << ',' << rad2deg(angles[j]) << ',' << g.gain(i, j) << '\n';
    });
    std::cerr << "peak: r=" << g.peak().range_m << " m, theta=" << rad2deg(g.peak().angle_rad)
              << " deg\n";
  }
};

struct TrajectoryCmd {
  Common common;
  std::string start = "20,60", end = "20,0";

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("trajectory", "predicted focal point of every subcarrier (CSV)");
    common.attach(app);
    app->add_option("--start", start, "first-subcarrier focus r_m,theta_deg")->capture_default_str();
    app->add_option("--end", end, "last-subcarrier focus r_m,theta_deg")->capture_default_str();
    app->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig sc = common.scenario();
    const TrajectorySpec t{parse_position(start, "--start"), parse_position(end, "--end")};
    common.write([&](std::ostream& os) {
      os << "m,r_focus_m,theta_focus_deg\n" << std::setprecision(10);
      for (int m = 1; m <= sc.system.n_subcarriers; ++m) {
        const PolarPosition f = focal_point(sc.system, t, m, common.convention());
        os << m << ',' << f.range_m << ',' << rad2deg(f.angle_rad) << '\n';
      }
    });
  }
};

struct ExportCmd {
  Common common;
  int count = 1000;
  std::string dir = "dataset";
  std::string split_name = "train";
  std::vector<double> snr_db{10.0, 20.0, 30.0};
  std::string vr_law = "random";
  bool per_subcarrier_snr = false;

  void attach(CLI::App& root) {
    CLI::App* app = root.add_subcommand("export-dataset", "CBS observations as f32 tensors + labels");
    common.attach(app);
    app->add_option("--count", count, "samples")->capture_default_str();
    app->add_option("--dir", dir, "output directory")->capture_default_str();
    app->add_option("--split", split_name, "split name")->capture_default_str();
    app->add_option("--snr-db", snr_db, "SNR values cycled over samples")->delimiter(',');
    app->add_option("--vr-law", vr_law, "config | random")->capture_default_str();
    app->add_flag("--per-subcarrier-snr", per_subcarrier_snr);
    app->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig sc = common.scenario();
    ExperimentSpec s;
    s.cfg = sc.system;
    s.region = sc.region;
    s.snr_grid_db = snr_db;
    s.position_law = PositionLaw::uniform_over(sc.region);
    if (vr_law == "random") {
      s.vr_law.kind = VrLaw::Kind::kRandom;
    } else if (vr_law == "config") {
      s.vr_law.kind = VrLaw::Kind::kFixed;
      s.vr_law.fixed = sc.visibility;
    } else {
      throw ConfigError("--vr-law must be config or random");
    }
    s.params.convention = common.convention();
    s.seed = common.seed;
    s.threads = common.threads;
    s.per_subcarrier_snr = per_subcarrier_snr;
    export_dataset(s, count, common.out.empty() ? dir : common.out, split_name);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-field wideband localization simulator"};
  app.require_subcommand(1);
  MonteCarloCmd mc;
  CrbSweepCmd cs;
  LocalizeCmd lc;
  GainMapCmd gm;
  TrajectoryCmd tr;
  ExportCmd ex;
  mc.attach(app);
  cs.attach(app);
  lc.attach(app);
  gm.attach(app);
  tr.attach(app);
  ex.attach(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
