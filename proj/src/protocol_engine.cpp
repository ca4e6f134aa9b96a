#include "qdion/protocol_engine.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <random>

#include "qdion/errors.hpp"
#include "qdion/units.hpp"

namespace qdion {

namespace {

enum TraceKey : std::uint64_t { kProbe = 1, kBright = 2, kDark = 3 };

void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

int poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

class Accumulator {
 public:
  void add(double counts, double photons) {
    ++n_;
    photons_ += photons;
    const double d = counts - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (counts - mean_);
  }
  TraceStats stats() const {
    TraceStats s;
    s.n = n_;
    s.mean = mean_;
    s.variance = n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    s.mean_photons = n_ > 0 ? photons_ / static_cast<double>(n_) : 0.0;
    return s;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double photons_ = 0.0;
};

IonLevel prepare(const SequenceConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < cfg.prep_efficiency ? IonLevel::DDark : IonLevel::DOther;
}

TraceStats exact_trace(const SequenceConfig& cfg, const ReadoutRates& readout, IonLevel level) {
  TraceStats s;
  s.mean = readout.mean_counts(level, cfg.t_readout_window);
  s.n = cfg.n_reps;
  return s;
}

}  // namespace

void SequenceConfig::validate() const {
  require(t_init >= 0.0 && t_interact >= 0.0 && t_cool >= 0.0,
          "SequenceConfig: durations must be >= 0");
  require(t_readout_window > 0.0, "SequenceConfig: t_readout_window must be > 0");
  require(is_probability(prep_efficiency), "SequenceConfig: prep_efficiency must lie in [0, 1]");
  require(is_probability(p_abs), "SequenceConfig: p_abs must lie in [0, 1]");
  require(is_probability(branch_to_S), "SequenceConfig: branch_to_S must lie in [0, 1]");
  require(std::isfinite(gamma_qd) && gamma_qd >= 0.0, "SequenceConfig: gamma_qd must be >= 0");
  require(n_reps >= 1, "SequenceConfig: n_reps must be >= 1");
  require(d_state_lifetime_ms >= 0.0, "SequenceConfig: d_state_lifetime_ms must be >= 0");
}

double SequenceConfig::mean_photons() const {
  return units::per_s_to_per_us(gamma_qd) * t_interact;
}

TrialOutcome simulate_trial(IonLevel start, std::span<const PhotonSource> sources,
                            const SequenceConfig& cfg, const ReadoutRates& readout, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::exponential_distribution<double> unit_exp(1.0);

  // Fixed-position draws first, so the photon loop below cannot shift them.
  const double decay_draw = unit_exp(rng);
  const double window = cfg.t_readout_window;
  const double background = readout.mean_counts(IonLevel::DDark, window);
  const int n_background = poisson(background, rng);
  const int n_signal = poisson(readout.mean_counts(IonLevel::SBright, window) - background, rng);

  TrialOutcome out;
  IonLevel level = start;
  for (const auto& src : sources) {
    double elapsed = unit_exp(rng);
    while (elapsed <= src.mean_photons) {
      const bool present = uniform(rng) < src.presence;
      if (present) ++out.photons_sent;
      if (level == IonLevel::DDark) {
        const double u_abs = uniform(rng);
        const double u_branch = uniform(rng);
        if (present && u_abs < src.p_abs && u_branch < cfg.branch_to_S) {
          level = IonLevel::SBright;
        }
      }
      elapsed += unit_exp(rng);
    }
  }

  if (cfg.d_state_lifetime_ms > 0.0 && level != IonLevel::SBright &&
      decay_draw * cfg.d_state_lifetime_ms * 1e3 < cfg.t_interact) {
    level = IonLevel::SBright;
  }

  out.final_level = level;
  out.counts = n_background + (level == IonLevel::SBright ? n_signal : 0);
  return out;
}

double TraceStats::standard_error() const {
  return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
}

Calibration simulate_calibration(const SequenceConfig& cfg, const ReadoutRates& readout,
                                 std::uint64_t seed) {
  cfg.validate();
  readout.validate();
  if (cfg.ideal_calibration) {
    return {exact_trace(cfg, readout, IonLevel::SBright), exact_trace(cfg, readout, IonLevel::DDark)};
  }
  SequenceConfig no_probe = cfg;
  no_probe.t_interact = 0.0;
  no_probe.d_state_lifetime_ms = 0.0;
  Accumulator bright, dark;
  for (std::int64_t i = 0; i < cfg.n_reps; ++i) {
    auto rng_b = make_stream(seed, {kBright, static_cast<std::uint64_t>(i)});
    bright.add(simulate_trial(IonLevel::SBright, {}, no_probe, readout, rng_b).counts, 0.0);
    auto rng_d = make_stream(seed, {kDark, static_cast<std::uint64_t>(i)});
    const IonLevel start = prepare(cfg, rng_d);
    dark.add(simulate_trial(start, {}, no_probe, readout, rng_d).counts, 0.0);
  }
  return {bright.stats(), dark.stats()};
}

TraceStats simulate_probe_trace(const SequenceConfig& cfg, const ReadoutRates& readout,
                                std::span<const PhotonSource> sources, std::uint64_t seed) {
  cfg.validate();
  readout.validate();
  Accumulator acc;
  for (std::int64_t i = 0; i < cfg.n_reps; ++i) {
    auto rng = make_stream(seed, {kProbe, static_cast<std::uint64_t>(i)});
    const IonLevel start = prepare(cfg, rng);
    const auto outcome = simulate_trial(start, sources, cfg, readout, rng);
    acc.add(outcome.counts, outcome.photons_sent);
  }
  return acc.stats();
}

TransferEstimate estimate_transfer(const TraceStats& qd, const Calibration& cal, double n_bar) {
  const double contrast = cal.bright.mean - cal.dark.mean;
  const double s_err = cal.bright.standard_error();
  const double d_err = cal.dark.standard_error();
  const double contrast_err = std::hypot(s_err, d_err);
  if (!(contrast > 0.0) || contrast <= 3.0 * contrast_err) {
    throw EstimatorError(fmt::format(
        "calibration traces indistinguishable: c_S - c_D = {:.4g} +- {:.2g}", contrast,
        contrast_err));
  }
  TransferEstimate est;
  const double p = (qd.mean - cal.dark.mean) / contrast;
  est.p_transfer = p;
  const double q_err = qd.standard_error();
  est.p_transfer_err =
      std::sqrt(q_err * q_err + p * p * s_err * s_err + (1.0 - p) * (1.0 - p) * d_err * d_err) /
      contrast;
  if (n_bar > 0.0 && p < 1.0) {
    est.p_abs = -std::log1p(-p) / n_bar;
    est.p_abs_err = est.p_transfer_err / ((1.0 - p) * n_bar);
  }
  return est;
}

double expected_transfer(const SequenceConfig& cfg) {
  cfg.validate();
  const double hazard = cfg.mean_photons() * cfg.p_abs * cfg.branch_to_S;
  const double decay =
      cfg.d_state_lifetime_ms > 0.0 ? cfg.t_interact / (cfg.d_state_lifetime_ms * 1e3) : 0.0;
  return cfg.prep_efficiency * -std::expm1(-hazard - decay) +
         (1.0 - cfg.prep_efficiency) * -std::expm1(-decay);
}

namespace {

Fig2Point fig2_point_with(const SequenceConfig& cfg, const ReadoutRates& readout,
                          const Calibration& cal, std::uint64_t seed) {
  const PhotonSource source{cfg.mean_photons(), cfg.p_abs, 1.0};
  const auto qd = simulate_probe_trace(cfg, readout, std::span(&source, 1), seed);
  Fig2Point pt;
  pt.t_interact = cfg.t_interact;
  pt.n_bar_nominal = cfg.mean_photons();
  pt.n_bar_sampled = qd.mean_photons;
  pt.c_qd = qd.mean;
  pt.c_s = cal.bright.mean;
  pt.c_d = cal.dark.mean;
  pt.estimate = estimate_transfer(qd, cal, pt.n_bar_nominal);
  pt.expected_transfer = expected_transfer(cfg);
  return pt;
}

}  // namespace

Fig2Point run_fig2_point(const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::uint64_t seed) {
  const auto cal = simulate_calibration(cfg, readout, seed);
  return fig2_point_with(cfg, readout, cal, seed);
}

SaturationFit fit_saturation(std::span<const double> t, std::span<const double> y) {
  SaturationFit fit;
  if (t.size() != y.size() || t.size() < 3) {
    fit.message = "need at least three points";
    return fit;
  }
  const double t_max = *std::max_element(t.begin(), t.end());
  double t_min_pos = std::numeric_limits<double>::infinity();
  for (double v : t) {
    if (v > 0.0) t_min_pos = std::min(t_min_pos, v);
  }
  if (!std::isfinite(t_min_pos)) {
    fit.message = "no positive abscissa";
    return fit;
  }

  // Sum of squared residuals with A at its least-squares value for this tau.
  auto profile = [&](double log_tau, double* amplitude) {
    const double tau = std::exp(log_tau);
    double fy = 0.0, ff = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double f = -std::expm1(-t[i] / tau);
      fy += f * y[i];
      ff += f * f;
    }
    const double a = ff > 0.0 ? fy / ff : 0.0;
    double ssr = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = y[i] - a * -std::expm1(-t[i] / tau);
      ssr += r * r;
    }
    if (amplitude) *amplitude = a;
    return ssr;
  };

  const double lo = std::log(t_min_pos / 100.0);
  const double hi = std::log(t_max * 100.0);
  constexpr int kScan = 400;
  int best = 0;
  double best_ssr = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double ssr = profile(lo + (hi - lo) * k / kScan, nullptr);
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best = k;
    }
  }
  if (best == 0 || best == kScan) {
    fit.message = "time constant not bracketed by the data";
    fit.tau = std::exp(lo + (hi - lo) * best / kScan);
    profile(std::log(fit.tau), &fit.amplitude);
    return fit;
  }

  double a = lo + (hi - lo) * (best - 1) / kScan;
  double b = lo + (hi - lo) * (best + 1) / kScan;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = profile(c, nullptr), fd = profile(d, nullptr);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = profile(c, nullptr);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = profile(d, nullptr);
    }
  }
  const double log_tau = 0.5 * (a + b);
  fit.tau = std::exp(log_tau);
  const double ssr = profile(log_tau, &fit.amplitude);

  // Covariance from the Gauss-Newton normal matrix at the optimum.
  Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = std::exp(-t[i] / fit.tau);
    const Eigen::Vector2d j(1.0 - e, -fit.amplitude * e * t[i] / (fit.tau * fit.tau));
    jtj += j * j.transpose();
  }
  const double dof = static_cast<double>(t.size()) - 2.0;
  if (dof > 0.0 && std::abs(jtj.determinant()) > 0.0) {
    const Eigen::Matrix2d cov = jtj.inverse() * (ssr / dof);
    fit.amplitude_err = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.tau_err = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  fit.converged = true;
  fit.message = "ok";
  return fit;
}

Fig2Sweep run_fig2_sweep(const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::span<const double> t_values, std::uint64_t seed) {
  require(t_values.size() >= 5, "run_fig2_sweep: need at least five T values");
  const auto cal = simulate_calibration(cfg, readout, seed);
  Fig2Sweep sweep;
  std::vector<double> t, y;
  for (double value : t_values) {
    SequenceConfig at = cfg;
    at.t_interact = value;
    sweep.points.push_back(fig2_point_with(at, readout, cal, seed));
    t.push_back(value);
    y.push_back(sweep.points.back().estimate.p_transfer);
  }
  sweep.fit = fit_saturation(t, y);
  return sweep;
}

void SpinPrepConfig::validate() const {
  require(fidelity_up > 0.5 && fidelity_up < 1.0, "SpinPrepConfig: fidelity_up must lie in (0.5, 1)");
  require(fidelity_down > 0.5 && fidelity_down < 1.0,
          "SpinPrepConfig: fidelity_down must lie in (0.5, 1)");
  require(pump_pulse_len >= 0.0 && probe_pulse_len >= 0.0,
          "SpinPrepConfig: pulse lengths must be >= 0");
  require(pump_pulse_max > 0.0, "SpinPrepConfig: pump_pulse_max must be > 0");
  require(pump_pulse_len <= pump_pulse_max,
          "SpinPrepConfig: pump_pulse_len exceeds pump_pulse_max");
  require(anchor_p_up > 1.0 - fidelity_down && anchor_p_up < fidelity_up,
          "SpinPrepConfig: anchor_p_up must lie strictly between 1 - fidelity_down and fidelity_up");
  require(!pump_time_constant || *pump_time_constant > 0.0,
          "SpinPrepConfig: pump_time_constant must be > 0");
  require(rep_rate > 0.0 && t_interact >= 0.0, "SpinPrepConfig: rep_rate > 0, t_interact >= 0");
  require(probe_pulse_len * 1e-9 * rep_rate * 1e3 <= 1.0,
          "SpinPrepConfig: probe pulse longer than the repetition period");
  require(zeeman_split > 0.0, "SpinPrepConfig: zeeman_split must be > 0");
}

double calibrated_pump_time_constant(const SpinPrepConfig& spin) {
  spin.validate();
  const double p_min = 1.0 - spin.fidelity_down;
  const double p_max = spin.fidelity_up;
  const double remaining = (p_max - spin.anchor_p_up) / (p_max - p_min);
  return -spin.pump_pulse_max / std::log(remaining);
}

double spin_population(const SpinPrepConfig& spin) {
  spin.validate();
  const double p_min = 1.0 - spin.fidelity_down;
  const double p_max = spin.fidelity_up;
  const double tau_c = spin.pump_time_constant.value_or(calibrated_pump_time_constant(spin));
  return p_max - (p_max - p_min) * std::exp(-spin.pump_pulse_len / tau_c);
}

double fig4_resonant_photons(const SpinPrepConfig& spin, const SequenceConfig& cfg) {
  spin.validate();
  cfg.validate();
  const double cycles = spin.t_interact * spin.rep_rate * 1e-3;
  return cycles * units::ns_to_us(spin.probe_pulse_len) * units::per_s_to_per_us(cfg.gamma_qd);
}

std::vector<PhotonSource> fig4_sources(double p_up, const SpinPrepConfig& spin,
                                       const LinkModelParams& link, const SequenceConfig& cfg) {
  require(is_probability(p_up), "fig4: p_up must lie in [0, 1]");
  link.validate();
  // The spin-down transition must sit far outside the ion line for spin-down
  // emission to be neglected.
  if (AbsorptionLine{20.0}(spin.zeeman_split * 1e3) > 1e-3) {
    throw ParameterError("fig4: Zeeman splitting does not resolve the spin transitions");
  }
  const double full = fig4_resonant_photons(spin, cfg);
  std::vector<PhotonSource> out{{full, cfg.p_abs, p_up}};
  if (link.has_leakage()) out.push_back({full / link.leakage_ratio_at_sat, cfg.p_abs, 1.0});
  return out;
}

double fig4_expected_normalized(double p_up, const SpinPrepConfig& spin,
                                const LinkModelParams& link, const SequenceConfig& cfg) {
  SpinPrepConfig at_max = spin;
  at_max.pump_pulse_len = spin.pump_pulse_max;
  auto transfer = [&](double p) {
    double hazard = 0.0;
    for (const auto& src : fig4_sources(p, spin, link, cfg)) {
      hazard += src.mean_photons * src.presence * src.p_abs * cfg.branch_to_S;
    }
    return cfg.prep_efficiency * -std::expm1(-hazard);
  };
  return transfer(p_up) / transfer(spin_population(at_max));
}

namespace {

Fig4Point fig4_point_with(const SpinPrepConfig& spin, const LinkModelParams& link,
                          const SequenceConfig& cfg, const ReadoutRates& readout,
                          const Calibration& cal, const TransferEstimate& reference,
                          std::uint64_t seed) {
  Fig4Point pt;
  pt.pump_pulse_len = spin.pump_pulse_len;
  pt.p_up = spin_population(spin);
  const auto sources = fig4_sources(pt.p_up, spin, link, cfg);
  const auto trace = simulate_probe_trace(cfg, readout, sources, seed);
  const auto est = estimate_transfer(trace, cal, 0.0);
  pt.transfer = est.p_transfer;
  pt.transfer_err = est.p_transfer_err;
  pt.normalized = est.p_transfer / reference.p_transfer;
  pt.normalized_err = std::abs(pt.normalized) *
                      std::hypot(est.p_transfer_err / std::max(std::abs(est.p_transfer), 1e-300),
                                 reference.p_transfer_err / reference.p_transfer);
  if (est.p_transfer == 0.0) pt.normalized_err = est.p_transfer_err / reference.p_transfer;
  pt.expected_normalized = fig4_expected_normalized(pt.p_up, spin, link, cfg);
  return pt;
}

TransferEstimate fig4_reference(const SpinPrepConfig& spin, const LinkModelParams& link,
                                const SequenceConfig& cfg, const ReadoutRates& readout,
                                const Calibration& cal, std::uint64_t seed) {
  SpinPrepConfig at_max = spin;
  at_max.pump_pulse_len = spin.pump_pulse_max;
  const auto sources = fig4_sources(spin_population(at_max), spin, link, cfg);
  const auto est = estimate_transfer(simulate_probe_trace(cfg, readout, sources, seed), cal, 0.0);
  if (!(est.p_transfer > 0.0)) {
    throw EstimatorError("fig4: no transfer observed at the longest pump pulse");
  }
  return est;
}

}  // namespace

Fig4Point run_fig4_point(const SpinPrepConfig& spin, const LinkModelParams& link,
                         const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::uint64_t seed) {
  const auto cal = simulate_calibration(cfg, readout, seed);
  const auto reference = fig4_reference(spin, link, cfg, readout, cal, seed);
  return fig4_point_with(spin, link, cfg, readout, cal, reference, seed);
}

std::vector<Fig4Point> run_fig4_sweep(const SpinPrepConfig& spin, const LinkModelParams& link,
                                      const SequenceConfig& cfg, const ReadoutRates& readout,
                                      std::span<const double> pump_pulse_lens,
                                      std::uint64_t seed) {
  const auto cal = simulate_calibration(cfg, readout, seed);
  const auto reference = fig4_reference(spin, link, cfg, readout, cal, seed);
  std::vector<Fig4Point> out;
  out.reserve(pump_pulse_lens.size());
  for (double len : pump_pulse_lens) {
    SpinPrepConfig at = spin;
    at.pump_pulse_len = len;
    out.push_back(fig4_point_with(at, link, cfg, readout, cal, reference, seed));
  }
  return out;
}

}  // namespace qdion
