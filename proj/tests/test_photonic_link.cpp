#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qdion/errors.hpp"
#include "qdion/photonic_link.hpp"

using namespace qdion;

namespace {

// Convolving a Lorentzian term with a unit-peak Lorentzian of half width a
// shifts its pole by -a and scales it by pi a.
double analytic_overlap(const EmissionSpectrum& spec, const AbsorptionLine& line, double nu0) {
  const double a = line.fwhm / 2.0;
  const std::complex<double> i{0.0, 1.0};
  double sum = 0.0;
  for (const auto& t : spec.terms) sum += (t.residue / (i * nu0 - (t.pole - a))).real();
  const double incoherent = spec.photon_rate * a * sum;
  return (1.0 - spec.psb_fraction) * (incoherent + spec.coherent_weight * line(nu0));
}

EmitterParams fig3a_emitter() {
  EmitterParams p;
  p.s = 11.0;
  p.delta = 250.0;
  p.dephasing_fixed = 93.0;
  return p;
}

}  // namespace

TEST_CASE("scale calibration against a monochromatic benchmark") {
  const AbsorptionLine line{20.0};
  CHECK(calibrate_scale_k(0.018, line) == doctest::Approx(0.018));
  CHECK_THROWS_AS(calibrate_scale_k(0.0, line), ParameterError);
  CHECK_THROWS_AS(calibrate_scale_k(1.5, line), ParameterError);
}

TEST_CASE("overlap agrees with the analytic convolution") {
  const AbsorptionLine line{20.0};
  for (const auto& p : {fig3a_emitter(), EmitterParams{}}) {
    const auto spec = emission_spectrum(p);
    for (double nu0 : {-800.0, -300.0, 0.0, 5.0, 250.0, 637.0}) {
      CAPTURE(nu0);
      CHECK(overlap_photon_number(spec, line, nu0) ==
            doctest::Approx(analytic_overlap(spec, line, nu0)).epsilon(1e-4));
    }
  }
}

TEST_CASE("overlap is converged against a ten times finer grid") {
  const AbsorptionLine line{20.0};
  const auto p = fig3a_emitter();
  const auto coarse = emission_spectrum(p);
  const auto fine = emission_spectrum(p, default_spectrum_grid(p, 10 * 4096));
  for (double nu0 : {-600.0, 0.0, 12.5, 585.0}) {
    CHECK(overlap_photon_number(coarse, line, nu0) ==
          doctest::Approx(overlap_photon_number(fine, line, nu0)).epsilon(1e-4));
  }
}

TEST_CASE("a grid coarser than the ion line is refused") {
  const AbsorptionLine line{20.0};
  EmitterParams p;
  const auto spec = emission_spectrum(p, default_spectrum_grid(p, 200));
  CHECK_THROWS_AS(overlap_photon_number(spec, line, 0.0), ResolutionError);
}

TEST_CASE("laser leakage") {
  EmitterParams p;
  LinkModelParams link;
  // QD photon rate at s = 1, including the intensity-dependent dephasing.
  const double n_sat = 2 * std::numbers::pi * 250.0 * steady_state(p).excited_population;
  CHECK(n_sat < 2 * std::numbers::pi * 250.0 * 0.25);
  CHECK(laser_leakage_rate(p, link) == doctest::Approx(n_sat / 70.0));
  p.s = 3.0;
  CHECK(laser_leakage_rate(p, link) == doctest::Approx(3.0 * n_sat / 70.0));
  CHECK(laser_leakage_rate(p, link.without_leakage()) == 0.0);
  CHECK_FALSE(link.without_leakage().has_leakage());
}

TEST_CASE("absorption probability composition") {
  const AbsorptionLine line{20.0};
  EmitterParams p;
  p.s = 2.0;
  LinkModelParams link;
  const auto spec = emission_spectrum(p);
  const auto b = p_abs_breakdown(p, spec, link, line);
  CHECK(b.p_abs == doctest::Approx(0.018 * (b.n_overlap + b.n_laser) / (b.n_qd_total + b.n_laser)));
  const auto clean = p_abs_breakdown(p, spec, link.without_leakage(), line);
  CHECK(clean.n_laser == 0.0);
  CHECK(clean.p_abs == doctest::Approx(0.018 * clean.n_overlap / clean.n_qd_total));
  CHECK(b.p_abs > clean.p_abs);
}

TEST_CASE("phonon sideband photons never reach the ion line") {
  const AbsorptionLine line{20.0};
  EmitterParams p;
  p.s = 0.5;
  const auto link = LinkModelParams{}.without_leakage();
  const double with = p_abs_model(p, link, line);
  p.psb_fraction = 0.0;
  const double without = p_abs_model(p, link, line);
  CHECK(with == doctest::Approx(0.87 * without));
}

TEST_CASE("weak drive approaches the scale times the zero-phonon share") {
  const AbsorptionLine line{20.0};
  EmitterParams p;
  p.s = 1e-6;
  p.dephasing_coeff = 0.0;
  const double v = p_abs_model(p, LinkModelParams{}.without_leakage(), line);
  CHECK(v < 0.018 * 0.87);
  CHECK(v == doctest::Approx(0.018 * 0.87).epsilon(1e-2));
}

TEST_CASE("absorption probability stays within [0, scale_k]") {
  const AbsorptionLine line{20.0};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> s_dist(0.01, 20.0), d_dist(-400.0, 400.0),
      o_dist(-1000.0, 1000.0);
  for (int i = 0; i < 30; ++i) {
    EmitterParams p;
    p.s = s_dist(rng);
    p.delta = d_dist(rng);
    LinkModelParams link;
    link.ion_freq_offset = o_dist(rng);
    const double v = p_abs_model(p, link, line);
    CHECK(v >= 0.0);
    CHECK(v <= link.scale_k);
  }
}

TEST_CASE("intensity sweep favors weak excitation") {
  const AbsorptionLine line{20.0};
  LinkModelParams link;
  double prev = 1.0;
  double first = 0.0, last = 0.0;
  for (double s : {0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 5.0, 7.0, 11.0}) {
    EmitterParams p;
    p.s = s;
    const double v = p_abs_model(p, link, line);
    CHECK(v < prev);
    prev = v;
    if (s == 0.1) first = v;
    last = v;
  }
  CHECK(first >= 0.010);
  CHECK(first <= 0.015);
  CHECK(first / last >= 4.0);
}

TEST_CASE("detuning sweep reuses one spectrum") {
  const AbsorptionLine line{20.0};
  const auto p = fig3a_emitter();
  LinkModelParams link;
  const std::vector<double> offsets{-500.0, 0.0, 500.0};
  const auto sweep = detuning_sweep(p, link, line, offsets);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    link.ion_freq_offset = offsets[i];
    CHECK(sweep[i] == doctest::Approx(p_abs_model(p, link, line)));
  }
  CHECK(sweep[1] > sweep[0]);
  CHECK(sweep[1] > sweep[2]);
}

TEST_CASE("link budget") {
  const auto b = reference_link_budget();
  const auto t = budget_product(b);
  CHECK(t.path_transmission == doctest::Approx(0.0142).epsilon(0.02));
  CHECK(t.overall == doctest::Approx(5.0e-4).epsilon(0.05));

  SUBCASE("stage order does not matter") {
    auto shuffled = b;
    std::mt19937 rng(3);
    for (int i = 0; i < 5; ++i) {
      std::shuffle(shuffled.stages.begin(), shuffled.stages.end(), rng);
      CHECK(budget_product(shuffled).overall == doctest::Approx(t.overall).epsilon(1e-14));
    }
  }
  SUBCASE("invalid budgets") {
    LinkBudget empty;
    CHECK_THROWS_AS(budget_product(empty), ParameterError);
    auto bad = b;
    bad.stages[0].second = 1.2;
    CHECK_THROWS_AS(budget_product(bad), ParameterError);
  }
}

TEST_CASE("invalid link parameters") {
  LinkModelParams link;
  link.leakage_ratio_at_sat = 0.0;
  CHECK_THROWS_AS(link.validate(), ParameterError);
  link = LinkModelParams{};
  link.scale_k = -1.0;
  CHECK_THROWS_AS(link.validate(), ParameterError);
  EmitterParams p;
  p.s = 0.0;
  CHECK_THROWS_AS(p_abs_model(p, LinkModelParams{}, AbsorptionLine{}), ParameterError);
}
