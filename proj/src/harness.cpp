#include "cbsloc/harness.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "parallel.hpp"

namespace cbsloc {

namespace {

constexpr std::uint64_t kDrawStream = 0;
constexpr std::uint64_t kLinkStride = 1000;

std::string visible_list(const VisibilityRegion& vr) {
  std::string s;
  for (std::size_t i = 0; i < vr.visible.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(vr.visible[i]);
  }
  return s;
}

double sq(double x) { return x * x; }

}  // namespace

PositionLaw PositionLaw::uniform_over(const SearchRegion& region) {
  PositionLaw law;
  law.r_lo = region.r_min;
  law.r_hi = region.r_max;
  law.theta_lo = region.theta_min;
  law.theta_hi = region.theta_max;
  return law;
}

PolarPosition PositionLaw::sample(Rng& rng) const {
  if (kind == Kind::kFixed) return fixed;
  std::uniform_real_distribution<double> ur(r_lo, r_hi), ut(theta_lo, theta_hi);
  const double r = ur(rng);
  const double t = ut(rng);
  return {r, t};
}

std::string PositionLaw::describe() const {
  std::ostringstream os;
  os << std::setprecision(10);
  if (kind == Kind::kFixed) {
    os << "fixed(" << fixed.range_m << "m;" << rad2deg(fixed.angle_rad) << "deg)";
  } else {
    os << "uniform(r=" << r_lo << ".." << r_hi << "m;theta=" << rad2deg(theta_lo) << ".."
       << rad2deg(theta_hi) << "deg)";
  }
  return os.str();
}

VisibilityRegion VrLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::kStationary:
      return VisibilityRegion::stationary(n_subarrays);
    case Kind::kFixed:
      return fixed;
    case Kind::kRandom: {
      std::uniform_int_distribution<int> pick(1, (1 << n_subarrays) - 1);
      const int bits = pick(rng);
      VisibilityRegion vr;
      vr.n_subarrays = n_subarrays;
      vr.visible.clear();
      for (int i = 0; i < n_subarrays; ++i) {
        if (bits & (1 << i)) vr.visible.push_back(i + 1);
      }
      return vr;
    }
  }
  throw std::logic_error("unhandled VR law");
}

std::string VrLaw::describe() const {
  switch (kind) {
    case Kind::kStationary:
      return "stationary";
    case Kind::kFixed:
      return "fixed(" + std::to_string(fixed.n_subarrays) + ":" + visible_list(fixed) + ")";
    case Kind::kRandom:
      return "random_nonempty_subset(" + std::to_string(n_subarrays) + ")";
  }
  return "?";
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kCbs:
      return "cbs";
    case EstimatorKind::kCbsBt:
      return "cbs-bt";
    case EstimatorKind::kExternal:
      return "external";
  }
  return "?";
}

EstimatorKind estimator_from_string(const std::string& s) {
  if (s == "cbs") return EstimatorKind::kCbs;
  if (s == "cbs-bt" || s == "cbsbt") return EstimatorKind::kCbsBt;
  if (s == "external") return EstimatorKind::kExternal;
  throw ConfigError("unknown estimator '" + s + "' (cbs, cbs-bt, external)");
}

void ExperimentSpec::validate() const {
  cfg.validate();
  region.validate();
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (snr_grid_db.empty()) throw ConfigError("SNR grid is empty");
  if (position_law.kind == PositionLaw::Kind::kFixed) {
    position_law.fixed.validate();
  } else if (!(position_law.r_lo > 0.0 && position_law.r_lo <= position_law.r_hi &&
               position_law.theta_lo <= position_law.theta_hi &&
               std::abs(position_law.theta_lo) < kPi / 2 &&
               std::abs(position_law.theta_hi) < kPi / 2)) {
    throw ConfigError("invalid uniform position law");
  }
  if (vr_law.kind == VrLaw::Kind::kFixed) vr_law.fixed.validate_for(cfg);
  if (vr_law.kind == VrLaw::Kind::kRandom &&
      (vr_law.n_subarrays < 1 || vr_law.n_subarrays > 16 || cfg.n_antennas % vr_law.n_subarrays)) {
    throw ConfigError("random VR law needs 1..16 sub-arrays dividing n_antennas");
  }
  if (estimator == EstimatorKind::kCbsBt) params.validate(cfg);
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

SimulatedLink TrialContext::make_link() const {
  return SimulatedLink(spec->cfg, ue, vr, noise_vars, spec->seed, static_cast<std::uint64_t>(trial),
                       kLinkStride * static_cast<std::uint64_t>(snr_index + 1));
}

void RmseReport::write_csv(std::ostream& os) const {
  const bool crb = !rows.empty() && rows.front().has_crb;
  os << "snr_db,estimator,n_ok,n_failed,rmse_theta_rad,rmse_r_m,rmse_2d_m";
  if (crb) os << ",root_crb_theta_rad,root_crb_r_m,mean_crb_theta_rad2,mean_crb_r_m2,n_crb_singular";
  os << ",position_mode\n" << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.snr_db << ',' << estimator << ',' << r.n_ok << ',' << r.n_failed << ',' << r.rmse_angle
       << ',' << r.rmse_range << ',' << r.rmse_2d;
    if (crb) {
      os << ',' << r.root_crb_angle << ',' << r.root_crb_range << ',' << r.mean_crb_angle << ','
         << r.mean_crb_range << ',' << r.n_crb_singular;
    }
    os << ',' << position_mode << '\n';
  }
}

void RmseReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(os);
  if (!os) throw std::runtime_error("write failed for " + path);
}

namespace {

struct TrialOutcome {
  bool ok = false;
  double err_angle2 = 0.0, err_range2 = 0.0, err_2d2 = 0.0;
  bool crb_ok = false;
  double crb_angle = 0.0, crb_range = 0.0;
};

}  // namespace

RmseReport monte_carlo(const ExperimentSpec& spec, const TrialEstimator& estimator,
                       const std::string& name) {
  spec.validate();
  const int n_snr = static_cast<int>(spec.snr_grid_db.size());
  const int total = spec.n_trials * n_snr;
  const BeamPlan sweep_plan =
      trajectory_plan(spec.cfg, angle_sweep_trajectory(spec.region), spec.params.convention);

  std::vector<TrialOutcome> outcomes(total);
  detail::parallel_for(total, spec.threads, [&](int idx) {
    const int trial = idx / n_snr;
    const int s = idx % n_snr;
    Rng draw = make_stream(spec.seed, static_cast<std::uint64_t>(trial), kDrawStream);
    TrialContext ctx;
    ctx.spec = &spec;
    ctx.trial = trial;
    ctx.snr_index = s;
    ctx.snr_db = spec.snr_grid_db[s];
    ctx.ue = spec.position_law.sample(draw);
    ctx.vr = spec.vr_law.sample(draw);

    TrialOutcome& out = outcomes[idx];
    try {
      const double snr = db_to_linear(ctx.snr_db);
      const CVector u = noiseless_signal(spec.cfg, ctx.ue, ctx.vr, sweep_plan);
      ctx.noise_vars = spec.per_subcarrier_snr
                           ? noise_vars_per_subcarrier(u, snr)
                           : RVector::Constant(spec.cfg.n_subcarriers, noise_var_for_snr(u, snr));
      const PolarPosition est = estimator(ctx);
      out.err_angle2 = sq(est.angle_rad - ctx.ue.angle_rad);
      out.err_range2 = sq(est.range_m - ctx.ue.range_m);
      out.err_2d2 = sq(est.x() - ctx.ue.x()) + sq(est.y() - ctx.ue.y());
      out.ok = std::isfinite(out.err_angle2) && std::isfinite(out.err_range2);
      if (out.ok && spec.with_crb) {
        try {
          const CrbResult b = crb(spec.cfg, ctx.ue, ctx.vr, sweep_plan, ctx.noise_vars);
          out.crb_angle = b.crb_angle;
          out.crb_range = b.crb_range;
          out.crb_ok = true;
        } catch (const SingularFimError&) {
          out.crb_ok = false;
        }
      }
    } catch (const std::exception&) {
      out.ok = false;
    }
  });

  RmseReport report;
  report.estimator = name;
  report.position_mode = spec.position_law.describe();
  for (int s = 0; s < n_snr; ++s) {
    RmseRow row;
    row.snr_db = spec.snr_grid_db[s];
    row.has_crb = spec.with_crb;
    double sa = 0, sr = 0, s2 = 0, ca = 0, cr = 0, rca = 0, rcr = 0;
    int n_crb = 0;
    for (int t = 0; t < spec.n_trials; ++t) {
      const TrialOutcome& o = outcomes[t * n_snr + s];
      if (!o.ok) {
        ++row.n_failed;
        continue;
      }
      ++row.n_ok;
      sa += o.err_angle2;
      sr += o.err_range2;
      s2 += o.err_2d2;
      if (spec.with_crb) {
        if (o.crb_ok) {
          ++n_crb;
          ca += o.crb_angle;
          cr += o.crb_range;
          rca += std::sqrt(o.crb_angle);
          rcr += std::sqrt(o.crb_range);
        } else {
          ++row.n_crb_singular;
        }
      }
    }
    if (row.n_ok > 0) {
      row.rmse_angle = std::sqrt(sa / row.n_ok);
      row.rmse_range = std::sqrt(sr / row.n_ok);
      row.rmse_2d = std::sqrt(s2 / row.n_ok);
    } else {
      row.rmse_angle = row.rmse_range = row.rmse_2d = std::numeric_limits<double>::quiet_NaN();
    }
    if (n_crb > 0) {
      row.mean_crb_angle = ca / n_crb;
      row.mean_crb_range = cr / n_crb;
      row.root_crb_angle = rca / n_crb;
      row.root_crb_range = rcr / n_crb;
    }
    report.rows.push_back(row);
  }
  return report;
}

RmseReport monte_carlo(const ExperimentSpec& spec) {
  switch (spec.estimator) {
    case EstimatorKind::kCbs:
      return monte_carlo(
          spec,
          [](const TrialContext& ctx) {
            SimulatedLink link = ctx.make_link();
            return cbs(ctx.spec->region, link, ctx.spec->params.convention).position();
          },
          "cbs");
    case EstimatorKind::kCbsBt:
      return monte_carlo(
          spec,
          [](const TrialContext& ctx) {
            SimulatedLink link = ctx.make_link();
            return cbs_bt(ctx.spec->region, ctx.spec->params, link).position();
          },
          "cbs-bt");
    case EstimatorKind::kExternal:
      throw ConfigError("external estimates are scored with score_predictions");
  }
  throw std::logic_error("unhandled estimator");
}

void CrbSweepSpec::validate() const {
  cfg.validate();
  region.validate();
  if (snr_grid_db.empty() || subcarrier_counts.empty() || bandwidths_hz.empty() || vr_cases.empty()) {
    throw ConfigError("CRB sweep axes must be non-empty");
  }
  if (position_law.kind == PositionLaw::Kind::kUniform && n_positions < 1) {
    throw ConfigError("n_positions must be >= 1");
  }
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::vector<CrbRow> crb_sweep(const CrbSweepSpec& spec) {
  spec.validate();
  const bool fixed = spec.position_law.kind == PositionLaw::Kind::kFixed;
  const int n_pos = fixed ? 1 : spec.n_positions;
  std::vector<PolarPosition> positions(n_pos);
  for (int i = 0; i < n_pos; ++i) {
    Rng draw = make_stream(spec.seed, static_cast<std::uint64_t>(i), kDrawStream);
    positions[i] = spec.position_law.sample(draw);
  }

  struct Case {
    int M;
    double B;
    std::size_t vr;
  };
  std::vector<Case> cases;
  for (int M : spec.subcarrier_counts)
    for (double B : spec.bandwidths_hz)
      for (std::size_t v = 0; v < spec.vr_cases.size(); ++v) cases.push_back({M, B, v});

  // Bounds at unit SNR; both SNR conventions make the bound scale exactly as 1/snr.
  struct Unit {
    bool ok = false;
    double crb_angle = 0.0, crb_range = 0.0;
  };
  std::vector<Unit> unit(cases.size() * n_pos);
  detail::parallel_for(static_cast<int>(unit.size()), spec.threads, [&](int idx) {
    const Case& c = cases[idx / n_pos];
    const PolarPosition& p = positions[idx % n_pos];
    SystemConfig cfg = spec.cfg;
    cfg.n_subcarriers = c.M;
    cfg.bandwidth_hz = c.B;
    cfg.validate();
    const VisibilityRegion& vr = spec.vr_cases[c.vr];
    const BeamPlan plan = trajectory_plan(cfg, angle_sweep_trajectory(spec.region));
    const CVector u = noiseless_signal(cfg, p, vr, plan);
    try {
      const CrbResult b = spec.per_subcarrier_snr ? crb(cfg, p, vr, plan, noise_vars_per_subcarrier(u, 1.0))
                                                  : crb(cfg, p, vr, plan, noise_var_for_snr(u, 1.0));
      unit[idx] = {true, b.crb_angle, b.crb_range};
    } catch (const SingularFimError&) {
      unit[idx] = {};
    } catch (const ConfigError&) {
      unit[idx] = {};
    }
  });

  std::vector<CrbRow> rows;
  for (double snr_db : spec.snr_grid_db) {
    const double snr = db_to_linear(snr_db);
    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
      const Case& c = cases[ci];
      CrbRow row;
      row.snr_db = snr_db;
      row.n_subcarriers = c.M;
      row.bandwidth_hz = c.B;
      row.stationary = spec.vr_cases[c.vr].is_stationary();
      row.visible = visible_list(spec.vr_cases[c.vr]);
      row.position_mode = fixed ? spec.position_law.describe()
                                : "mean_of_" + std::to_string(n_pos) + "_" + spec.position_law.describe();
      row.n_positions = n_pos;
      double ta = 0, tr = 0;
      int n_ok = 0;
      for (int i = 0; i < n_pos; ++i) {
        const Unit& u = unit[ci * n_pos + i];
        if (!u.ok) {
          ++row.n_singular;
          continue;
        }
        ++n_ok;
        ta += std::sqrt(u.crb_angle / snr);
        tr += std::sqrt(u.crb_range / snr);
      }
      row.root_crb_theta_rad = n_ok ? ta / n_ok : std::numeric_limits<double>::quiet_NaN();
      row.root_crb_r_m = n_ok ? tr / n_ok : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(row);
    }
  }
  return rows;
}

void write_crb_csv(std::ostream& os, const std::vector<CrbRow>& rows) {
  os << "snr_db,M,B_hz,stationary_flag,root_crb_theta_rad,root_crb_r_m,position_mode,visible,"
        "n_positions,n_singular\n"
     << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.snr_db << ',' << r.n_subcarriers << ',' << r.bandwidth_hz << ',' << (r.stationary ? 1 : 0)
       << ',' << r.root_crb_theta_rad << ',' << r.root_crb_r_m << ',' << r.position_mode << ','
       << r.visible << ',' << r.n_positions << ',' << r.n_singular << '\n';
  }
}

void write_crb_csv(const std::string& path, const std::vector<CrbRow>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_crb_csv(os, rows);
  if (!os) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

namespace {

struct CsvTable {
  std::map<std::string, std::size_t> col;
  std::vector<std::vector<std::string>> rows;

  std::size_t need(const std::string& name, const std::string& path) const {
    const auto it = col.find(name);
    if (it == col.end()) throw std::runtime_error(path + ": missing column '" + name + "'");
    return it->second;
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) t.col[header[i]] = i;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " columns");
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

double parse_num(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(where + ": not a number: '" + s + "'");
  }
}

}  // namespace

RmseReport score_predictions(const std::string& labels_csv, const std::string& predictions_csv) {
  const CsvTable labels = read_csv(labels_csv);
  const CsvTable preds = read_csv(predictions_csv);
  const auto l_id = labels.need("sample_id", labels_csv);
  const auto l_r = labels.need("r_m", labels_csv);
  const auto l_t = labels.need("theta_rad", labels_csv);
  const auto l_s = labels.need("snr_db", labels_csv);
  const auto p_id = preds.need("sample_id", predictions_csv);
  const auto p_r = preds.need("r_hat_m", predictions_csv);
  const auto p_t = preds.need("theta_hat_rad", predictions_csv);

  std::map<long long, PolarPosition> predicted;
  for (const auto& row : preds.rows) {
    const long long id = static_cast<long long>(parse_num(row[p_id], predictions_csv));
    const PolarPosition p{parse_num(row[p_r], predictions_csv), parse_num(row[p_t], predictions_csv)};
    if (!predicted.emplace(id, p).second) {
      throw std::runtime_error(predictions_csv + ": duplicate sample_id " + std::to_string(id));
    }
  }

  struct Acc {
    int ok = 0, failed = 0;
    double a = 0, r = 0, d2 = 0;
  };
  std::map<double, Acc> by_snr;
  std::size_t matched = 0;
  for (const auto& row : labels.rows) {
    const long long id = static_cast<long long>(parse_num(row[l_id], labels_csv));
    const PolarPosition truth{parse_num(row[l_r], labels_csv), parse_num(row[l_t], labels_csv)};
    Acc& acc = by_snr[parse_num(row[l_s], labels_csv)];
    const auto it = predicted.find(id);
    if (it == predicted.end() || !std::isfinite(it->second.range_m) ||
        !std::isfinite(it->second.angle_rad)) {
      ++acc.failed;
      continue;
    }
    ++matched;
    const PolarPosition& e = it->second;
    ++acc.ok;
    acc.a += sq(e.angle_rad - truth.angle_rad);
    acc.r += sq(e.range_m - truth.range_m);
    acc.d2 += sq(e.x() - truth.x()) + sq(e.y() - truth.y());
  }
  if (matched != predicted.size()) {
    throw std::runtime_error(predictions_csv + ": predictions reference unknown sample ids");
  }

  RmseReport report;
  report.estimator = "external";
  report.position_mode = "labels(" + labels_csv + ")";
  for (const auto& [snr, acc] : by_snr) {
    RmseRow row;
    row.snr_db = snr;
    row.n_ok = acc.ok;
    row.n_failed = acc.failed;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.rmse_angle = acc.ok ? std::sqrt(acc.a / acc.ok) : nan;
    row.rmse_range = acc.ok ? std::sqrt(acc.r / acc.ok) : nan;
    row.rmse_2d = acc.ok ? std::sqrt(acc.d2 / acc.ok) : nan;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace cbsloc
