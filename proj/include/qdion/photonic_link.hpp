#pragma once

// Spectral-overlap model between QD emission and the cavity-coupled ion
// line, including residual excitation-laser leakage, and the optical path
// efficiency budget.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qdion/ion_node.hpp"
#include "qdion/qd_emitter.hpp"
#include "qdion/units.hpp"

namespace qdion {

struct LinkModelParams {
  /// QD-signal to laser-photon ratio at s = 1. Infinity disables leakage.
  double leakage_ratio_at_sat = 70.0;
  /// Absorption probability per photon for a monochromatic resonant field.
  double scale_k = 0.018;
  double ion_freq_offset = 0.0;  ///< nu_0 - nu_L, MHz

  void validate() const;
  bool has_leakage() const { return std::isfinite(leakage_ratio_at_sat); }
  LinkModelParams without_leakage() const {
    auto copy = *this;
    copy.leakage_ratio_at_sat = std::numeric_limits<double>::infinity();
    return copy;
  }
  bool operator==(const LinkModelParams&) const = default;
};

/// scale_k that makes a monochromatic field resonant with the ion give
/// `benchmark` absorption probability per photon.
double calibrate_scale_k(double benchmark, const AbsorptionLine& line);

/// Zero-phonon-line photon rate overlapping the ion line at nu_0 - nu_L =
/// ion_freq_offset: trapezoid of density x L plus the elastic weight x L.
/// Phonon-sideband photons are excluded. Throws ResolutionError when the
/// grid spacing near the ion line exceeds FWHM / 5.
double overlap_photon_number(const EmissionSpectrum& spec, const AbsorptionLine& line,
                             double ion_freq_offset);

struct AbsorptionBreakdown {
  double n_overlap = 0.0;   ///< QD photons/us seen by the ion line
  double n_qd_total = 0.0;  ///< all QD photons/us, sideband included
  double n_laser = 0.0;     ///< leaked laser photons/us
  double line_at_laser = 0.0;
  double p_abs = 0.0;
};

/// Leaked laser photon rate: n_QD(s=1) / ratio * s.
double laser_leakage_rate(const EmitterParams& params, const LinkModelParams& link);

/// Absorption probability per received photon,
/// scale_k (n_overlap + n_L L(nu_0 - nu_L)) / (n_QD + n_L).
AbsorptionBreakdown p_abs_breakdown(const EmitterParams& params, const EmissionSpectrum& spec,
                                    const LinkModelParams& link, const AbsorptionLine& line);

double p_abs_model(const EmitterParams& params, const LinkModelParams& link,
                   const AbsorptionLine& line);

/// p_abs versus nu_0 - nu_L with the emitter held fixed.
std::vector<double> detuning_sweep(const EmitterParams& params, const LinkModelParams& link,
                                   const AbsorptionLine& line, std::span<const double> offsets);

struct LinkBudget {
  std::vector<std::pair<std::string, double>> stages;
  double extraction_into_first_lens = 1.0;

  void validate() const;
  bool operator==(const LinkBudget&) const = default;
};

/// QD sample to ion cavity chain as itemized for the experiment, with 3.5%
/// extraction into the first lens.
LinkBudget reference_link_budget();

struct BudgetTotals {
  double path_transmission = 0.0;
  double overall = 0.0;
};

BudgetTotals budget_product(const LinkBudget& budget);

}  // namespace qdion
