#pragma once

// Resonantly driven two-level quantum-dot transition: steady state of the
// optical Bloch equations, resonance-fluorescence spectrum from the quantum
// regression theorem, intensity correlation and radiative decay.
//
// Conventions: the frame rotates at the laser frequency nu_L, delta is
// nu_QD - nu_L, and spectra are functions of nu - nu_L. All rates are stored
// in MHz (ordinary frequency); photon rates are photons per microsecond.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace qdion {

struct EmitterParams {
  double gamma_rad = 250.0;  ///< radiative decay rate Gamma / 2pi, MHz
  double s = 1.0;            ///< I / I_sat
  double delta = 0.0;        ///< nu_QD - nu_L, MHz
  double dephasing_coeff = 9.3;  ///< pure dephasing per unit s, MHz
  /// Fixed pure-dephasing rate in MHz; replaces s * dephasing_coeff when set.
  std::optional<double> dephasing_fixed;
  double wandering_sigma = 0.0;  ///< RMS Gaussian wandering of nu_QD, MHz
  double psb_fraction = 0.13;    ///< share of photons in the phonon sideband

  /// Throws ParameterError naming the first violated constraint.
  void validate() const;

  /// Pure dephasing rate gamma_d in MHz.
  double dephasing() const;
  /// Total coherence decay gamma_2 = Gamma/2 + gamma_d, MHz.
  double coherence_decay() const;
  /// Rabi frequency in MHz; Omega^2 = s Gamma^2 / 2 so that s = 1 on
  /// resonance without dephasing gives an excited population of 1/4.
  double rabi() const;
  /// sqrt(Omega^2 + delta^2), MHz.
  double generalized_rabi() const;

  bool operator==(const EmitterParams&) const = default;
};

struct BlochSteadyState {
  double excited_population = 0.0;      ///< rho_ee
  std::complex<double> coherence{0.0};  ///< <sigma_minus> = rho_eg
};

/// Generator M of d/dt (<s->, <s+>, rho_ee) = 2pi (M v + b), in MHz.
Eigen::Matrix3cd bloch_generator(const EmitterParams& p);
Eigen::Vector3cd bloch_drive(const EmitterParams& p);

/// Closed-form stationary solution at the nominal detuning (wandering is not
/// averaged here).
BlochSteadyState steady_state(const EmitterParams& p);

/// Fraction of the emitted power that is coherently (elastically) scattered,
/// |<s->|^2 / rho_ee. Written in a form that stays finite at s = 0, where it
/// returns the weak-drive limit Gamma / (2 gamma_2).
double coherent_fraction(const EmitterParams& p);

/// One term (1/pi) Re[residue / (i nu - pole)] of the incoherent spectrum,
/// with the pole in MHz. `residue` already carries any quadrature weight.
struct LorentzianTerm {
  std::complex<double> residue;
  std::complex<double> pole;
};

struct EmissionSpectrum {
  double coherent_weight = 0.0;  ///< photons/us in the elastic delta peak
  std::vector<double> grid;      ///< nu - nu_L, MHz, strictly increasing
  std::vector<double> incoherent_density;  ///< photons/us/MHz on grid
  double total_rate = 0.0;       ///< Gamma rho_ee, photons/us (all photons)
  double psb_fraction = 0.0;     ///< copied from the emitter

  /// Incoherent weight lying outside the grid, from the analytic terms.
  double tail_weight = 0.0;
  /// In-grid share of the incoherent weight.
  double captured_fraction = 1.0;
  /// Set when captured_fraction < 0.999.
  bool truncated = false;

  /// Analytic representation; density(nu) = photon_rate * sum of terms.
  std::vector<LorentzianTerm> terms;
  double photon_rate = 0.0;  ///< 2pi Gamma in photons/us

  /// Incoherent density at an arbitrary offset, evaluated from the terms.
  double density_at(double nu) const;
  /// Trapezoid over the grid plus the analytic tail weight.
  double incoherent_weight() const;
  double grid_spacing_near(double nu) const;
};

/// Default grid: `points` uniformly spaced over +-span_factor * max(Omega_gen,
/// Gamma), widened by 5 sigma when spectral wandering is on.
std::vector<double> default_spectrum_grid(const EmitterParams& p,
                                          std::size_t points = 4096,
                                          double span_factor = 8.0);

/// Resonance-fluorescence spectrum on the default grid.
EmissionSpectrum emission_spectrum(const EmitterParams& p);
/// Resonance-fluorescence spectrum on a caller-supplied grid.
EmissionSpectrum emission_spectrum(const EmitterParams& p,
                                   std::span<const double> grid);

/// Number of Gauss-Hermite nodes used for spectral wandering.
inline constexpr std::size_t kWanderingNodes = 15;

/// Second-order intensity correlation g2(tau), tau in ns. With
/// `irf_sigma_ns` the result is convolved with a normalized Gaussian
/// detector response of that standard deviation.
std::vector<double> g2(const EmitterParams& p, std::span<const double> tau_ns,
                       std::optional<double> irf_sigma_ns = std::nullopt);

/// Radiative lifetime 1 / (2pi Gamma) in ns.
double radiative_lifetime_ns(const EmitterParams& p);

/// Excited population after a pulse, drive off: rho0 exp(-2pi Gamma t).
std::vector<double> lifetime_trace(const EmitterParams& p,
                                   std::span<const double> t_ns,
                                   double initial_population = 1.0);

}  // namespace qdion
