#pragma once

// Monte Carlo of the ion-state transfer sequences: initialize the ion in
// 2D3/2 m=-3/2, expose it to QD photons for T, read out the 369 nm
// fluorescence, and turn three accumulated traces into p_transfer and p_abs.
//
// Random streams are keyed by (seed, trace, trial), never by sweep point, so
// sweep points share their random numbers. Photon arrivals come from Exp(1)
// gaps and readout counts are drawn before the probe phase; together this
// makes every trial's outcome monotone in T, photon rate and spin population.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdion/ion_node.hpp"
#include "qdion/photonic_link.hpp"
#include "qdion/rng.hpp"

namespace qdion {

struct SequenceConfig {
  double t_init = 120.0;          ///< us
  double prep_efficiency = 0.90;  ///< share of ions reaching D_dark
  double t_interact = 0.0;        ///< probe duration, us
  double gamma_qd = 9e4;          ///< QD photons/s impinging on the cavity
  double p_abs = 0.01;            ///< absorption probability per photon
  double branch_to_S = 0.91;
  double t_readout_window = 19.0;  ///< us
  double t_cool = 160.0;           ///< us
  std::int64_t n_reps = 50000;
  /// Spontaneous 2D3/2 -> 2S1/2 decay during the probe; 0 disables it.
  double d_state_lifetime_ms = 0.0;
  /// Use analytic calibration means instead of simulated bright/dark traces.
  bool ideal_calibration = false;

  void validate() const;
  /// gamma_qd * t_interact.
  double mean_photons() const;
  double cycle_time() const { return t_init + t_interact + t_readout_window + t_cool; }
  bool operator==(const SequenceConfig&) const = default;
};

struct TrialOutcome {
  IonLevel final_level = IonLevel::DDark;
  int counts = 0;
  int photons_sent = 0;
};

/// A Poisson photon stream reaching the ion during the probe. Each photon is
/// present with probability `presence` (spin-selective emission) and, if
/// the ion is in D_dark, absorbed with probability `p_abs`.
struct PhotonSource {
  double mean_photons = 0.0;
  double p_abs = 0.0;
  double presence = 1.0;
};

TrialOutcome simulate_trial(IonLevel start, std::span<const PhotonSource> sources,
                            const SequenceConfig& cfg, const ReadoutRates& readout, Rng& rng);

/// Mean and variance of per-trial counts.
struct TraceStats {
  double mean = 0.0;
  double variance = 0.0;
  std::int64_t n = 0;
  double mean_photons = 0.0;  ///< average photons_sent
  double standard_error() const;
};

struct Calibration {
  TraceStats bright;  ///< c_S: ion in 2S1/2
  TraceStats dark;    ///< c_D: ion prepared in 2D3/2, no probe
};

Calibration simulate_calibration(const SequenceConfig& cfg, const ReadoutRates& readout,
                                 std::uint64_t seed);

TraceStats simulate_probe_trace(const SequenceConfig& cfg, const ReadoutRates& readout,
                                std::span<const PhotonSource> sources, std::uint64_t seed);

struct TransferEstimate {
  double p_transfer = 0.0;
  double p_transfer_err = 0.0;
  /// -ln(1 - p_transfer) / n_bar; empty for n_bar = 0 or p_transfer >= 1.
  std::optional<double> p_abs;
  std::optional<double> p_abs_err;
};

/// p_transfer = (c_QD - c_D) / (c_S - c_D), p_abs = -ln(1 - p_transfer) / n_bar.
/// Throws EstimatorError when c_S - c_D is not resolved above 3 standard
/// errors (or is not positive).
TransferEstimate estimate_transfer(const TraceStats& qd, const Calibration& cal, double n_bar);

struct Fig2Point {
  double t_interact = 0.0;
  double n_bar_nominal = 0.0;  ///< gamma_qd * T
  double n_bar_sampled = 0.0;  ///< mean photons actually drawn
  double c_qd = 0.0;
  double c_s = 0.0;
  double c_d = 0.0;
  TransferEstimate estimate;
  double expected_transfer = 0.0;  ///< closed form for the same model
};

/// Closed-form mean of p_transfer for the sequence model.
double expected_transfer(const SequenceConfig& cfg);

Fig2Point run_fig2_point(const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::uint64_t seed);

struct SaturationFit {
  double amplitude = 0.0;
  double tau = 0.0;  ///< same unit as the abscissa
  double amplitude_err = 0.0;
  double tau_err = 0.0;
  bool converged = false;
  std::string message;
};

/// Least-squares fit of y = A (1 - exp(-t / tau)). The amplitude is profiled
/// out analytically and tau found by bracketing plus golden-section search
/// in log tau.
SaturationFit fit_saturation(std::span<const double> t, std::span<const double> y);

struct Fig2Sweep {
  std::vector<Fig2Point> points;
  SaturationFit fit;
};

/// Needs at least five T values (us). The calibration is simulated once.
Fig2Sweep run_fig2_sweep(const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::span<const double> t_values, std::uint64_t seed);

struct SpinPrepConfig {
  double pump_pulse_len = 0.0;    ///< ns
  double pump_pulse_max = 700.0;  ///< ns; longest pulse, calibration anchor
  double anchor_p_up = 0.81;      ///< p_up measured at pump_pulse_max
  double probe_pulse_len = 600.0;  ///< ns
  double fidelity_up = 0.922;
  double fidelity_down = 0.928;
  /// ns; calibrated from the endpoints when absent.
  std::optional<double> pump_time_constant;
  double rep_rate = 670.0;    ///< kHz
  double t_interact = 700.0;  ///< us
  double zeeman_split = 20.0;  ///< GHz

  void validate() const;
  bool operator==(const SpinPrepConfig&) const = default;
};

/// Time constant reproducing p_up(0) = 1 - fidelity_down and
/// p_up(pump_pulse_max) = anchor_p_up with ceiling fidelity_up.
double calibrated_pump_time_constant(const SpinPrepConfig& spin);

/// p_up = p_max - (p_max - p_min) exp(-tau_p / tau_c).
double spin_population(const SpinPrepConfig& spin);

/// Resonant QD photons per experiment when the spin is always up.
double fig4_resonant_photons(const SpinPrepConfig& spin, const SequenceConfig& cfg);

/// Photon streams for one spin-correlation experiment; leakage is the last
/// source so toggling it leaves the QD photons' random numbers unchanged.
std::vector<PhotonSource> fig4_sources(double p_up, const SpinPrepConfig& spin,
                                       const LinkModelParams& link, const SequenceConfig& cfg);

/// Closed-form normalized transfer at p_up (relative to p_up at the longest
/// pump pulse).
double fig4_expected_normalized(double p_up, const SpinPrepConfig& spin,
                                const LinkModelParams& link, const SequenceConfig& cfg);

struct Fig4Point {
  double pump_pulse_len = 0.0;
  double p_up = 0.0;
  double transfer = 0.0;
  double transfer_err = 0.0;
  double normalized = 0.0;
  double normalized_err = 0.0;
  double expected_normalized = 0.0;
};

/// One spin-correlation point. Leakage is included when the link has a
/// finite leakage ratio; pass link.without_leakage() for the ideal curve.
Fig4Point run_fig4_point(const SpinPrepConfig& spin, const LinkModelParams& link,
                         const SequenceConfig& cfg, const ReadoutRates& readout,
                         std::uint64_t seed);

std::vector<Fig4Point> run_fig4_sweep(const SpinPrepConfig& spin, const LinkModelParams& link,
                                      const SequenceConfig& cfg, const ReadoutRates& readout,
                                      std::span<const double> pump_pulse_lens,
                                      std::uint64_t seed);

}  // namespace qdion
