#include "cbsloc/signal_chain.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace cbsloc {

namespace {

// Exact re-evaluation every kResync steps bounds recurrence drift.
constexpr int kResync = 64;

inline std::complex<double> unit_phasor(double cycles) {
  return std::polar(1.0, 2.0 * kPi * std::remainder(cycles, 1.0));
}

}  // namespace

CMatrix phasor_sums(const SystemConfig& cfg, const PolarPosition& pos, const BeamPlan& plan,
                    const RMatrix& coeffs) {
  plan.validate(cfg);
  if (coeffs.rows() != cfg.n_antennas) throw ConfigError("coefficient rows must equal n_antennas");
  const int n_ant = cfg.n_antennas;
  const Eigen::Index n_cols = coeffs.cols();
  const double c = cfg.lightspeed_mps;
  const double df = cfg.subcarrier_spacing_hz();
  const RVector dist = antenna_distances(cfg, pos);

  // Skip antennas whose coefficients are all zero (invisible ones).
  std::vector<int> active;
  for (int n = 0; n < n_ant; ++n) {
    if (coeffs.row(n).cwiseAbs().maxCoeff() != 0.0) active.push_back(n);
  }

  CMatrix out = CMatrix::Zero(cfg.n_subcarriers, n_cols);
  std::vector<double> c0(n_ant), step(n_ant);
  std::vector<std::complex<double>> z(n_ant), dz(n_ant);
  for (const auto& seg : plan.segments) {
    const auto& ttd = seg.ttd;
    const double f_first = subcarrier_frequency(cfg, seg.first_m);
    for (int n : active) {
      // cycles(k) = c0 + k * step for subcarrier first_m + k
      const double rc = dist[n] / c;
      c0[n] = std::remainder(f_first * rc, 1.0) - std::remainder(ttd.phases[n], 1.0) -
              std::remainder((f_first - ttd.base_freq_hz) * ttd.delays[n], 1.0);
      step[n] = std::remainder(df * (rc - ttd.delays[n]), 1.0);
      dz[n] = unit_phasor(step[n]);
    }
    for (int m = seg.first_m; m <= seg.last_m; ++m) {
      const int k = m - seg.first_m;
      if (k % kResync == 0) {
        for (int n : active) z[n] = unit_phasor(c0[n] + std::remainder(k * step[n], 1.0));
      }
      for (Eigen::Index col = 0; col < n_cols; ++col) {
        std::complex<double> acc = 0.0;
        for (int n : active) acc += coeffs(n, col) * z[n];
        out(m - 1, col) = acc;
      }
      for (int n : active) z[n] *= dz[n];
    }
  }
  return out;
}

CVector noiseless_signal(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const BeamPlan& plan,
                         std::complex<double> pilot) {
  pos.validate();
  const RMatrix mask = vr_mask(cfg, vr);
  const CMatrix sums = phasor_sums(cfg, pos, plan, mask);
  CVector u(cfg.n_subcarriers);
  const double inv_sqrt_n = 1.0 / std::sqrt(double(cfg.n_antennas));
  for (int m = 1; m <= cfg.n_subcarriers; ++m) {
    u[m - 1] = path_gain(cfg, pos.range_m, m) * inv_sqrt_n * sums(m - 1, 0) * pilot;
  }
  return u;
}

CVector noiseless_signal(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const CMatrix& weights,
                         std::complex<double> pilot) {
  if (weights.rows() != cfg.n_antennas || weights.cols() != cfg.n_subcarriers) {
    throw ConfigError("weight matrix must be N x M");
  }
  CVector u(cfg.n_subcarriers);
  for (int m = 1; m <= cfg.n_subcarriers; ++m) {
    u[m - 1] = channel(cfg, pos, vr, m).entries.dot(weights.col(m - 1)) * pilot;
  }
  return u;
}

ReceivedFrame add_noise(const CVector& u, double noise_var, Rng& rng, std::complex<double> pilot) {
  if (!(noise_var >= 0.0)) throw ConfigError("noise variance must be non-negative");
  return add_noise(u, RVector::Constant(u.size(), noise_var), rng, pilot);
}

ReceivedFrame add_noise(const CVector& u, double noise_var, std::uint64_t seed,
                        std::complex<double> pilot) {
  Rng rng = make_stream(seed, 0);
  return add_noise(u, noise_var, rng, pilot);
}

ReceivedFrame add_noise(const CVector& u, const RVector& noise_vars, Rng& rng,
                        std::complex<double> pilot) {
  if (noise_vars.size() != u.size()) throw ConfigError("noise variance vector length mismatch");
  if ((noise_vars.array() < 0.0).any()) throw ConfigError("noise variance must be non-negative");
  ReceivedFrame frame;
  frame.samples = u;
  frame.pilot = pilot;
  frame.noise_var = noise_vars.size() ? noise_vars.mean() : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    // draw unconditionally so streams stay aligned across noise levels
    const double re = gauss(rng);
    const double im = gauss(rng);
    const double s = std::sqrt(noise_vars[m] / 2.0);
    frame.samples[m] += std::complex<double>(s * re, s * im);
  }
  return frame;
}

double noise_var_for_snr(const CVector& u, double snr_linear) {
  if (!(snr_linear > 0.0)) throw ConfigError("SNR must be positive");
  const double power = u.size() ? u.squaredNorm() / double(u.size()) : 0.0;
  if (!(power > 0.0)) throw ConfigError("signal is identically zero, SNR undefined");
  return power / snr_linear;
}

double noise_var_for_snr(const SystemConfig& cfg, const PolarPosition& pos,
                         const VisibilityRegion& vr, const BeamPlan& plan, double snr_linear) {
  return noise_var_for_snr(noiseless_signal(cfg, pos, vr, plan), snr_linear);
}

RVector noise_vars_per_subcarrier(const CVector& u, double snr_linear) {
  if (!(snr_linear > 0.0)) throw ConfigError("SNR must be positive");
  if (!(u.squaredNorm() > 0.0)) throw ConfigError("signal is identically zero, SNR undefined");
  return u.cwiseAbs2() / snr_linear;
}

void write_frame_csv(std::ostream& os, const ReceivedFrame& frame) {
  os << "m,re,im\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < frame.samples.size(); ++i) {
    os << i + 1 << ',' << frame.samples[i].real() << ',' << frame.samples[i].imag() << '\n';
  }
}

void write_frame_csv(const std::string& path, const ReceivedFrame& frame) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_frame_csv(os, frame);
  if (!os) throw std::runtime_error("write failed for " + path);
}

ReceivedFrame read_frame_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("m,re,im", 0) != 0) {
    throw std::runtime_error("frame CSV must start with header m,re,im");
  }
  std::vector<std::complex<double>> vals;
  int expected = 1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw std::runtime_error("malformed frame CSV row: " + line);
    }
    if (std::stoi(a) != expected++) throw std::runtime_error("frame CSV rows out of order");
    vals.emplace_back(std::stod(b), std::stod(c));
  }
  ReceivedFrame frame;
  frame.samples = Eigen::Map<CVector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return frame;
}

ReceivedFrame read_frame_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_frame_csv(is);
}

}  // namespace cbsloc
