#pragma once

// Cavity-coupled 174Yb+ node: cooperativity, cavity-modified branching out of
// 3D[3/2]1/2, the cavity-mediated absorption line and the 369 nm readout.

#include <optional>
#include <string_view>

#include "qdion/rng.hpp"

namespace qdion {

struct IonCavityParams {
  double g = 1.6;          ///< ion-cavity coupling / 2pi, MHz
  double kappa = 25.0;     ///< cavity field decay / 2pi, MHz
  double gamma_ion = 2.1;  ///< atomic dipole decay / 2pi, MHz
  double bare_branch_to_D = 0.02;
  double line_fwhm = 20.0;  ///< cavity-mediated absorption line, MHz
  /// Measured branching into 2D3/2; replaces the Purcell formula when set.
  std::optional<double> branch_to_D_override;

  void validate() const;
  bool operator==(const IonCavityParams&) const = default;
};

/// C0 = g^2 / (2 kappa gamma).
double cooperativity(const IonCavityParams& p);

struct Branching {
  double to_S = 0.0;
  double to_D = 0.0;
};

/// Decay probabilities out of 3D[3/2]1/2: to_D = bare + 2C0 / (2C0 + 1),
/// unless an override is given. Throws ParameterError if to_D >= 1.
Branching branching(const IonCavityParams& p);

/// Peak-normalized Lorentzian response of the cavity-coupled ion.
struct AbsorptionLine {
  double fwhm = 20.0;  ///< MHz
  double operator()(double detuning_mhz) const {
    const double x = 2.0 * detuning_mhz / fwhm;
    return 1.0 / (1.0 + x * x);
  }
};

double absorption_line(const IonCavityParams& p, double detuning_mhz);

enum class IonLevel {
  DDark,    ///< 2D3/2 m=-3/2, the prepared state that absorbs QD photons
  SBright,  ///< 2S1/2, fluoresces at readout
  DOther,   ///< other 2D3/2 Zeeman levels left by imperfect preparation
};

std::string_view to_string(IonLevel level);

/// Phenomenological PMT trace: a bright ion starts at bright_rate and decays
/// with bright_decay (non-cycling 369 nm transition); background is constant.
struct ReadoutRates {
  double bright_rate = 1.0583;      ///< counts/us at start of readout
  double bright_decay = 10.0;       ///< us
  double background_rate = 1.0 / 19.0;  ///< counts/us

  void validate() const;
  /// Expected counts in [0, window].
  double mean_counts(IonLevel level, double window_us) const;
  bool operator==(const ReadoutRates&) const = default;
};

/// Poisson-distributed PMT counts for an ion in `level` over the window.
int readout_counts(IonLevel level, double window_us, const ReadoutRates& rates, Rng& rng);

}  // namespace qdion
