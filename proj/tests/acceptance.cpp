// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qdion/protocol_engine.hpp"
#include "qdion/runner.hpp"

using namespace qdion;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;  // 0: no limit
  std::function<Verdict()> check;
};

EmitterParams emitter(double s, double delta, double dephase) {
  EmitterParams p;
  p.s = s;
  p.delta = delta;
  p.dephasing_fixed = dephase;
  return p;
}

std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) out.push_back(i);
  }
  return out;
}

Verdict saturation() {
  const double rho = steady_state(emitter(1.0, 0.0, 0.0)).excited_population;
  double worst = 0.0;
  for (double s : {0.1, 0.5, 1.0, 5.0, 11.0}) {
    for (double d : {0.0, 125.0, -125.0, 250.0, -250.0}) {
      for (double gd : {0.0, 9.3 * s}) {
        const auto p = emitter(s, d, gd);
        const auto ref = oracle::steady_state(oracle::from_saturation(250.0, s, d, gd));
        worst = std::max(worst, std::abs(steady_state(p).excited_population - oracle::excited(ref)));
      }
    }
  }
  return {std::abs(rho - 0.25) <= 1e-9 && worst < 1e-8,
          fmt::format("rho_ee = {:.12f}, max |closed form - ODE| = {:.2e} over 50 points", rho, worst)};
}

Verdict cooperativity_check() {
  const double c = cooperativity(IonCavityParams{});
  return {std::abs(c - 0.0244) <= 0.0005, fmt::format("C0 = {:.5f}", c)};
}

Verdict budget_check() {
  const auto t = budget_product(reference_link_budget());
  return {std::abs(t.path_transmission - 0.0142) <= 0.0005 && std::abs(t.overall - 5.0e-4) <= 0.3e-4,
          fmt::format("path = {:.5f}, overall = {:.3e}", t.path_transmission, t.overall)};
}

Verdict fig2() {
  const auto sc = load_preset("fig2b");
  const auto r = run_scenario(sc);
  const double tau = *r.meta("fit_tau_us");
  const double err = *r.meta("fit_tau_err_us");
  const bool ok = *r.meta("fit_converged") == 1.0 && std::abs(tau - 1100.0) <= 150.0 &&
                  sc.sequence.n_reps == 50000;
  return {ok, fmt::format("tau = {:.0f} +- {:.0f} us, amplitude = {:.3f}, photons at tau = {:.0f}",
                          tau, err, *r.meta("fit_amplitude"), *r.meta("fit_photons_at_tau"))};
}

Verdict fig3b() {
  const auto sc = load_preset("fig3b");
  const double k = calibrate_scale_k(0.018, AbsorptionLine{sc.ion.line_fwhm});
  const auto r = run_scenario(sc);
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (r.column(i, "p_abs") > r.column(best, "p_abs")) best = i;
  }
  const double top = r.column(best, "p_abs");
  const double at11 = r.column(r.rows.size() - 1, "p_abs");
  const bool ok = sc.link.scale_k == k && best == 0 && top >= 0.010 && top <= 0.015 &&
                  r.axis_values.back() == 11.0 && top / at11 >= 4.0;
  return {ok, fmt::format("max {:.3f}% at s = {}, p_abs(11) = {:.3f}%, ratio {:.2f}", 100 * top,
                          r.axis_values[best], 100 * at11, top / at11)};
}

Verdict fig3a() {
  const auto sc = load_preset("fig3a");
  const auto r = run_scenario(sc);
  std::vector<double> y;
  for (std::size_t i = 0; i < r.rows.size(); ++i) y.push_back(r.column(i, "p_abs"));
  const auto& x = r.axis_values;
  const double om = sc.emitter.generalized_rabi();

  // (i) global maximum at zero offset and its width on a fine grid.
  const auto top = std::max_element(y.begin(), y.end()) - y.begin();
  std::vector<double> fine_x;
  for (double v = -60.0; v <= 60.0 + 1e-9; v += 0.05) fine_x.push_back(v);
  const auto fine = detuning_sweep(sc.emitter, sc.link, AbsorptionLine{sc.ion.line_fwhm}, fine_x);
  const double peak = *std::max_element(fine.begin(), fine.end());
  auto crossing = [&](int dir) {
    std::size_t i = fine.size() / 2;
    while (i > 0 && i + 1 < fine.size() && fine[i] > peak / 2) i += dir;
    const std::size_t j = i - dir;
    return fine_x[i] + (peak / 2 - fine[i]) * (fine_x[j] - fine_x[i]) / (fine[j] - fine[i]);
  };
  const double fwhm = crossing(1) - crossing(-1);
  const bool ok_i = x[top] == 0.0 && fwhm >= 15.0 && fwhm <= 30.0;

  // (ii) local maxima within [0.5, 1.5] Omega_gen on each side.
  std::optional<std::size_t> lo, hi;
  for (auto i : local_maxima(y)) {
    if (x[i] <= -0.5 * om && x[i] >= -1.5 * om && (!lo || y[i] > y[*lo])) lo = i;
    if (x[i] >= 0.5 * om && x[i] <= 1.5 * om && (!hi || y[i] > y[*hi])) hi = i;
  }
  const bool ok_ii = lo && hi;

  // (iii) heights at the two sideband positions (mirrored where a maximum is missing).
  auto value_at = [&](double v) {
    const auto it = std::lower_bound(x.begin(), x.end(), v);
    return y[static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - x.begin(), y.size() - 1))];
  };
  const double pos_hi = hi ? x[*hi] : (lo ? -x[*lo] : om);
  const double pos_lo = lo ? x[*lo] : -pos_hi;
  const double h_lo = value_at(pos_lo), h_hi = value_at(pos_hi);
  const bool ok_iii = std::abs(h_hi - h_lo) > 0.05 * std::max(h_hi, h_lo);

  // Diagnostic: largest dephasing for which both sideband maxima appear.
  double limit = 0.0;
  for (double gd = 0.0; gd <= 93.0; gd += 1.0) {
    auto e = sc.emitter;
    e.dephasing_fixed = gd;
    const auto z = detuning_sweep(e, sc.link, AbsorptionLine{sc.ion.line_fwhm}, x);
    bool l = false, h = false;
    for (auto i : local_maxima(z)) {
      l = l || (x[i] <= -0.5 * om && x[i] >= -1.5 * om);
      h = h || (x[i] >= 0.5 * om && x[i] <= 1.5 * om);
    }
    if (l && h) limit = gd;
  }

  return {ok_i && ok_ii && ok_iii,
          fmt::format("(i) {} max at {} MHz, FWHM {:.1f} MHz; (ii) {} sideband maxima at {} / {} MHz "
                      "(Omega_gen {:.0f}); (iii) {} heights {:.3g} / {:.3g}; both sidebands resolved "
                      "only for gamma_d <= {:.0f} MHz",
                      ok_i ? "ok" : "FAIL", x[top], fwhm, ok_ii ? "ok" : "FAIL",
                      lo ? fmt::format("{}", x[*lo]) : std::string("none"),
                      hi ? fmt::format("{}", x[*hi]) : std::string("none"), om,
                      ok_iii ? "ok" : "FAIL", h_lo, h_hi, limit)};
}

Verdict estimator_bias() {
  SequenceConfig cfg;
  cfg.n_reps = 200000;
  cfg.ideal_calibration = true;
  cfg.branch_to_S = 0.91;
  cfg.prep_efficiency = 1.0;
  cfg.t_interact = 1000.0;
  const auto pt = run_fig2_point(cfg, ReadoutRates{}, 2015);
  const double ratio = pt.estimate.p_abs.value_or(0.0) / cfg.p_abs;
  return {ratio >= 0.88 && ratio <= 0.94,
          fmt::format("p_abs_est / p_abs_true = {:.4f} +- {:.4f} (T = 1000 us, {} reps)", ratio,
                      pt.estimate.p_abs_err.value_or(0.0) / cfg.p_abs, cfg.n_reps)};
}

Verdict fig4() {
  const auto sc = load_preset("fig4b");
  auto spin = *sc.spin;
  spin.pump_pulse_len = 0.0;
  const double p0 = spin_population(spin);
  spin.pump_pulse_len = 700.0;
  const double p700 = spin_population(spin);
  const bool ok_anchor = std::abs(p0 - 0.072) < 1e-12 && std::abs(p700 - 0.81) < 1e-12;

  const auto r = run_scenario(sc);
  bool monotone = true;
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    monotone = monotone && r.column(i, "p_up") >= r.column(i - 1, "p_up") &&
               r.column(i, "normalized") >= r.column(i - 1, "normalized") &&
               r.column(i, "normalized_no_leakage") >= r.column(i - 1, "normalized_no_leakage");
  }
  const double gap = r.column(0, "normalized") - r.column(0, "normalized_no_leakage");
  const double gap_err = std::hypot(r.column(0, "stderr"), r.column(0, "stderr_no_leakage"));
  const double gap_expected = r.column(0, "expected") - r.column(0, "expected_no_leakage");

  // Leakage-only floor at p_up = 0.
  SequenceConfig cfg = sc.sequence;
  const double floor_on = fig4_expected_normalized(0.0, *sc.spin, sc.link, cfg);
  const double floor_off = fig4_expected_normalized(0.0, *sc.spin, sc.link.without_leakage(), cfg);
  const bool ok_floor = gap > 0.0 && std::abs(gap - gap_expected) < 4.0 * gap_err &&
                        floor_on > 0.0 && floor_off == 0.0;
  return {ok_anchor && monotone && ok_floor,
          fmt::format("p_up(0) = {:.4f}, p_up(700 ns) = {:.4f}; monotone {}; leakage gap at p_up = "
                      "{:.3f}: {:.3f} +- {:.3f} (model {:.3f}); leakage floor at p_up = 0: {:.3f}",
                      p0, p700, monotone ? "yes" : "no", r.column(0, "p_up"), gap, gap_err,
                      gap_expected, floor_on)};
}

Verdict normalization() {
  double worst = 0.0;
  int n = 0;
  for (double s : {0.1, 0.5, 1.0, 5.0, 11.0}) {
    for (double d : {0.0, 125.0, -125.0, 250.0, -250.0}) {
      for (double gd : {0.0, 9.3 * s}) {
        const auto p = emitter(s, d, gd);
        const auto spec = emission_spectrum(p);
        const double expected =
            2 * std::numbers::pi * p.gamma_rad * steady_state(p).excited_population;
        worst = std::max(worst,
                         std::abs(spec.coherent_weight + spec.incoherent_weight() - expected) / expected);
        ++n;
      }
    }
  }
  return {worst < 1e-6, fmt::format("max relative error {:.2e} over {} parameter sets", worst, n)};
}

Verdict determinism() {
  std::string bad;
  for (const auto& name : preset_names()) {
    const auto sc = load_preset(name);
    if (to_csv(run_scenario(sc)) != to_csv(run_scenario(sc))) bad += name + " ";
  }
  return {bad.empty(), bad.empty() ? fmt::format("{} presets byte-identical", preset_names().size())
                                   : "differs: " + bad};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "saturation definition and ODE agreement", 1.0, saturation},
      {2, "cooperativity", 0.0, cooperativity_check},
      {3, "link budget", 0.0, budget_check},
      {4, "transfer versus exposure time constant", 30.0, fig2},
      {5, "absorption versus excitation intensity", 30.0, fig3b},
      {6, "absorption versus detuning shape", 60.0, fig3a},
      {7, "estimator bias", 60.0, estimator_bias},
      {8, "spin-correlated transfer", 0.0, fig4},
      {9, "spectrum normalization", 10.0, normalization},
      {10, "determinism", 0.0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
      v.pass = false;
      v.detail += fmt::format("; exceeded {} s", c.time_limit_s);
    }
    failures += v.pass ? 0 : 1;
    fmt::print("{} [{}] {} ({:.2f} s): {}\n", v.pass ? "PASS" : "FAIL", c.id, c.title, secs,
               v.detail);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
