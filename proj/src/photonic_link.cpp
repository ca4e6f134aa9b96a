#include "qdion/photonic_link.hpp"

#include <cmath>
#include <fmt/format.h>

#include "qdion/errors.hpp"

namespace qdion {

void LinkModelParams::validate() const {
  if (!(leakage_ratio_at_sat > 0.0)) {
    throw ParameterError("LinkModelParams: leakage_ratio_at_sat must be > 0");
  }
  if (!(std::isfinite(scale_k) && scale_k > 0.0)) {
    throw ParameterError("LinkModelParams: scale_k must be > 0");
  }
  if (!std::isfinite(ion_freq_offset)) {
    throw ParameterError("LinkModelParams: ion_freq_offset must be finite");
  }
}

double calibrate_scale_k(double benchmark, const AbsorptionLine& line) {
  if (!(benchmark > 0.0 && benchmark <= 1.0)) {
    throw ParameterError("calibrate_scale_k: benchmark must lie in (0, 1]");
  }
  // A delta-function spectrum on the ion resonance overlaps with weight L(0).
  return benchmark / line(0.0);
}

double overlap_photon_number(const EmissionSpectrum& spec, const AbsorptionLine& line,
                             double ion_freq_offset) {
  const double spacing = spec.grid_spacing_near(ion_freq_offset);
  if (spacing > line.fwhm / 5.0) {
    throw ResolutionError(fmt::format(
        "spectrum grid spacing {:.3g} MHz near the ion line exceeds FWHM/5 = {:.3g} MHz", spacing,
        line.fwhm / 5.0));
  }
  const auto& nu = spec.grid;
  const auto& d = spec.incoherent_density;
  double incoherent = 0.0;
  double prev = d[0] * line(ion_freq_offset - nu[0]);
  for (std::size_t i = 1; i < nu.size(); ++i) {
    const double cur = d[i] * line(ion_freq_offset - nu[i]);
    incoherent += 0.5 * (nu[i] - nu[i - 1]) * (cur + prev);
    prev = cur;
  }
  const double coherent = spec.coherent_weight * line(ion_freq_offset);
  return (1.0 - spec.psb_fraction) * (incoherent + coherent);
}

double laser_leakage_rate(const EmitterParams& params, const LinkModelParams& link) {
  link.validate();
  if (!link.has_leakage() || params.s == 0.0) return 0.0;
  EmitterParams at_sat = params;
  at_sat.s = 1.0;
  const double n_qd_sat =
      units::angular(at_sat.gamma_rad) * steady_state(at_sat).excited_population;
  return n_qd_sat / link.leakage_ratio_at_sat * params.s;
}

AbsorptionBreakdown p_abs_breakdown(const EmitterParams& params, const EmissionSpectrum& spec,
                                    const LinkModelParams& link, const AbsorptionLine& line) {
  link.validate();
  AbsorptionBreakdown out;
  out.n_overlap = overlap_photon_number(spec, line, link.ion_freq_offset);
  out.n_qd_total = spec.total_rate;
  out.n_laser = laser_leakage_rate(params, link);
  out.line_at_laser = line(link.ion_freq_offset);
  const double received = out.n_qd_total + out.n_laser;
  if (!(received > 0.0)) throw ParameterError("p_abs_model: no photons reach the ion (s = 0)");
  out.p_abs = link.scale_k * (out.n_overlap + out.n_laser * out.line_at_laser) / received;
  return out;
}

double p_abs_model(const EmitterParams& params, const LinkModelParams& link,
                   const AbsorptionLine& line) {
  const auto spec = emission_spectrum(params);
  return p_abs_breakdown(params, spec, link, line).p_abs;
}

std::vector<double> detuning_sweep(const EmitterParams& params, const LinkModelParams& link,
                                   const AbsorptionLine& line, std::span<const double> offsets) {
  const auto spec = emission_spectrum(params);
  std::vector<double> out;
  out.reserve(offsets.size());
  LinkModelParams at = link;
  for (double offset : offsets) {
    at.ion_freq_offset = offset;
    out.push_back(p_abs_breakdown(params, spec, at, line).p_abs);
  }
  return out;
}

void LinkBudget::validate() const {
  if (stages.empty()) throw ParameterError("LinkBudget: stage list is empty");
  for (const auto& [name, f] : stages) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw ParameterError(fmt::format("LinkBudget: stage '{}' fraction {} outside (0, 1]", name, f));
    }
  }
  if (!(extraction_into_first_lens > 0.0 && extraction_into_first_lens <= 1.0)) {
    throw ParameterError("LinkBudget: extraction_into_first_lens outside (0, 1]");
  }
}

LinkBudget reference_link_budget() {
  return {{
              {"microscope beam splitter 1", 0.90},
              {"microscope beam splitter 2", 0.90},
              {"linear polarizer", 0.41},
              {"QD microscope fiber coupling", 0.40},
              {"50 m fiber coupling", 0.70},
              {"fiber output polarization optics", 0.90},
              {"polarization filtering", 0.50},
              {"beam splitter 1", 0.90},
              {"beam splitter 2", 0.90},
              {"fiber cavity coupling", 0.42},
          },
          0.035};
}

BudgetTotals budget_product(const LinkBudget& budget) {
  budget.validate();
  BudgetTotals out{1.0, 0.0};
  for (const auto& stage : budget.stages) out.path_transmission *= stage.second;
  out.overall = budget.extraction_into_first_lens * out.path_transmission;
  return out;
}

}  // namespace qdion
