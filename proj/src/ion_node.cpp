#include "qdion/ion_node.hpp"

#include <cmath>
#include <random>
#include <string>

#include "qdion/errors.hpp"

namespace qdion {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}
}  // namespace

void IonCavityParams::validate() const {
  // g = 0 is allowed: it is the uncoupled (bare branching) limit.
  require(std::isfinite(g) && g >= 0.0, "IonCavityParams: g must be >= 0");
  require(std::isfinite(kappa) && kappa > 0.0, "IonCavityParams: kappa must be > 0");
  require(std::isfinite(gamma_ion) && gamma_ion > 0.0, "IonCavityParams: gamma_ion must be > 0");
  require(bare_branch_to_D > 0.0 && bare_branch_to_D < 1.0,
          "IonCavityParams: bare_branch_to_D must lie in (0, 1)");
  require(std::isfinite(line_fwhm) && line_fwhm > 0.0, "IonCavityParams: line_fwhm must be > 0");
  require(!branch_to_D_override || (*branch_to_D_override > 0.0 && *branch_to_D_override < 1.0),
          "IonCavityParams: branch_to_D_override must lie in (0, 1)");
}

double cooperativity(const IonCavityParams& p) {
  p.validate();
  return p.g * p.g / (2.0 * p.kappa * p.gamma_ion);
}

Branching branching(const IonCavityParams& p) {
  double to_d = 0.0;
  if (p.branch_to_D_override) {
    p.validate();
    to_d = *p.branch_to_D_override;
  } else {
    const double c0 = cooperativity(p);
    to_d = p.bare_branch_to_D + 2.0 * c0 / (2.0 * c0 + 1.0);
  }
  if (to_d >= 1.0) throw ParameterError("branching: probability to 2D3/2 reaches 1");
  return {1.0 - to_d, to_d};
}

double absorption_line(const IonCavityParams& p, double detuning_mhz) {
  p.validate();
  return AbsorptionLine{p.line_fwhm}(detuning_mhz);
}

std::string_view to_string(IonLevel level) {
  switch (level) {
    case IonLevel::DDark: return "D_dark";
    case IonLevel::SBright: return "S_bright";
    case IonLevel::DOther: return "D_other";
  }
  return "?";
}

void ReadoutRates::validate() const {
  require(std::isfinite(bright_rate) && bright_rate >= 0.0, "ReadoutRates: bright_rate must be >= 0");
  require(std::isfinite(bright_decay) && bright_decay > 0.0, "ReadoutRates: bright_decay must be > 0");
  require(std::isfinite(background_rate) && background_rate >= 0.0,
          "ReadoutRates: background_rate must be >= 0");
}

double ReadoutRates::mean_counts(IonLevel level, double window_us) const {
  validate();
  require(window_us > 0.0, "readout window must be > 0");
  double mean = background_rate * window_us;
  if (level == IonLevel::SBright) {
    mean += bright_rate * bright_decay * -std::expm1(-window_us / bright_decay);
  }
  return mean;
}

int readout_counts(IonLevel level, double window_us, const ReadoutRates& rates, Rng& rng) {
  const double mean = rates.mean_counts(level, window_us);
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

}  // namespace qdion
