#include "qdion/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "qdion/errors.hpp"

namespace qdion {

namespace {

using Row = std::vector<double>;

SweepResult make_result(const Scenario& sc, std::vector<std::string> columns) {
  SweepResult r;
  r.scenario = sc.name;
  r.axis = std::string(axis_name(sc.sweep.kind));
  r.axis_values = resolved_axis(sc);
  r.columns = std::move(columns);
  r.metadata.emplace_back("seed", static_cast<double>(sc.seed));
  return r;
}

AbsorptionLine line_of(const Scenario& sc) { return AbsorptionLine{sc.ion.line_fwhm}; }

SequenceConfig resolved_sequence(const Scenario& sc) {
  SequenceConfig cfg = sc.sequence;
  if (sc.p_abs_from_model) cfg.p_abs = p_abs_model(sc.emitter, sc.link, line_of(sc));
  return cfg;
}

void add_spectrum_meta(SweepResult& r, const EmissionSpectrum& spec) {
  r.metadata.emplace_back("grid_points", static_cast<double>(spec.grid.size()));
  r.metadata.emplace_back("grid_min_mhz", spec.grid.front());
  r.metadata.emplace_back("grid_max_mhz", spec.grid.back());
  r.metadata.emplace_back("grid_spacing_mhz", spec.grid_spacing_near(0.0));
  r.metadata.emplace_back("captured_fraction", spec.captured_fraction);
}

SweepResult run_fig2(const Scenario& sc) {
  auto r = make_result(sc, {"p_transfer", "stderr", "p_abs_est", "p_abs_stderr", "n_bar_nominal",
                            "n_bar_sampled", "c_qd", "c_s", "c_d", "expected"});
  const auto cfg = resolved_sequence(sc);
  const auto sweep = run_fig2_sweep(cfg, sc.readout, r.axis_values, sc.seed);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& p : sweep.points) {
    r.rows.push_back({p.estimate.p_transfer, p.estimate.p_transfer_err,
                      p.estimate.p_abs.value_or(nan), p.estimate.p_abs_err.value_or(nan),
                      p.n_bar_nominal, p.n_bar_sampled, p.c_qd, p.c_s, p.c_d,
                      p.expected_transfer});
  }
  r.metadata.emplace_back("n_reps", static_cast<double>(cfg.n_reps));
  r.metadata.emplace_back("p_abs", cfg.p_abs);
  r.metadata.emplace_back("c_s", sweep.points.front().c_s);
  r.metadata.emplace_back("c_d", sweep.points.front().c_d);
  r.metadata.emplace_back("fit_amplitude", sweep.fit.amplitude);
  r.metadata.emplace_back("fit_amplitude_err", sweep.fit.amplitude_err);
  r.metadata.emplace_back("fit_tau_us", sweep.fit.tau);
  r.metadata.emplace_back("fit_tau_err_us", sweep.fit.tau_err);
  r.metadata.emplace_back("fit_converged", sweep.fit.converged ? 1.0 : 0.0);
  r.metadata.emplace_back("fit_photons_at_tau", sweep.fit.tau * cfg.gamma_qd * 1e-6);
  return r;
}

SweepResult run_fig3a(const Scenario& sc) {
  auto r = make_result(sc, {"p_abs", "stderr", "p_abs_no_leakage"});
  const auto line = line_of(sc);
  const auto with = detuning_sweep(sc.emitter, sc.link, line, r.axis_values);
  const auto without = detuning_sweep(sc.emitter, sc.link.without_leakage(), line, r.axis_values);
  for (std::size_t i = 0; i < with.size(); ++i) r.rows.push_back({with[i], 0.0, without[i]});
  add_spectrum_meta(r, emission_spectrum(sc.emitter));
  r.metadata.emplace_back("scale_k", sc.link.scale_k);
  r.metadata.emplace_back("generalized_rabi_mhz", sc.emitter.generalized_rabi());
  return r;
}

SweepResult run_fig3b(const Scenario& sc) {
  auto r = make_result(sc, {"p_abs", "stderr", "p_abs_no_leakage", "coherent_fraction", "rho_ee"});
  const auto line = line_of(sc);
  for (double s : r.axis_values) {
    EmitterParams e = sc.emitter;
    e.s = s;
    const auto spec = emission_spectrum(e);
    const double with = p_abs_breakdown(e, spec, sc.link, line).p_abs;
    const double without = p_abs_breakdown(e, spec, sc.link.without_leakage(), line).p_abs;
    r.rows.push_back({with, 0.0, without, coherent_fraction(e), steady_state(e).excited_population});
  }
  r.metadata.emplace_back("scale_k", sc.link.scale_k);
  r.metadata.emplace_back("grid_points", 4096);
  return r;
}

SweepResult run_fig4(const Scenario& sc) {
  auto r = make_result(sc, {"p_up", "normalized", "stderr", "normalized_no_leakage",
                            "stderr_no_leakage", "expected", "expected_no_leakage", "transfer"});
  const auto cfg = resolved_sequence(sc);
  const auto with = run_fig4_sweep(*sc.spin, sc.link, cfg, sc.readout, r.axis_values, sc.seed);
  const auto without =
      run_fig4_sweep(*sc.spin, sc.link.without_leakage(), cfg, sc.readout, r.axis_values, sc.seed);
  for (std::size_t i = 0; i < with.size(); ++i) {
    r.rows.push_back({with[i].p_up, with[i].normalized, with[i].normalized_err,
                      without[i].normalized, without[i].normalized_err, with[i].expected_normalized,
                      without[i].expected_normalized, with[i].transfer});
  }
  r.metadata.emplace_back("n_reps", static_cast<double>(cfg.n_reps));
  r.metadata.emplace_back("p_abs", cfg.p_abs);
  r.metadata.emplace_back("pump_time_constant_ns", calibrated_pump_time_constant(*sc.spin));
  r.metadata.emplace_back("resonant_photons", fig4_resonant_photons(*sc.spin, cfg));
  return r;
}

SweepResult run_spectrum(const Scenario& sc) {
  auto r = make_result(sc, {"density"});
  const auto spec = emission_spectrum(sc.emitter, r.axis_values);
  for (double d : spec.incoherent_density) r.rows.push_back({d});
  add_spectrum_meta(r, spec);
  r.metadata.emplace_back("coherent_weight", spec.coherent_weight);
  r.metadata.emplace_back("total_rate", spec.total_rate);
  r.metadata.emplace_back("tail_weight", spec.tail_weight);
  r.metadata.emplace_back("psb_fraction", spec.psb_fraction);
  return r;
}

SweepResult run_budget(const Scenario& sc) {
  auto r = make_result(sc, {"transmission", "cumulative"});
  const auto budget = sc.budget ? *sc.budget : reference_link_budget();
  const auto totals = budget_product(budget);
  r.label_column = "name";
  double cumulative = 1.0;
  for (const auto& [name, f] : budget.stages) {
    cumulative *= f;
    r.labels.push_back(name);
    r.rows.push_back({f, cumulative});
  }
  r.metadata.emplace_back("path_transmission", totals.path_transmission);
  r.metadata.emplace_back("extraction", budget.extraction_into_first_lens);
  r.metadata.emplace_back("overall", totals.overall);
  return r;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double SweepResult::column(std::size_t row, std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column " + std::string(name));
  return rows.at(row).at(static_cast<std::size_t>(it - columns.begin()));
}

std::optional<double> SweepResult::meta(std::string_view key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return std::nullopt;
}

SweepResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  switch (scenario.sweep.kind) {
    case SweepKind::Fig2: return run_fig2(scenario);
    case SweepKind::Fig3a: return run_fig3a(scenario);
    case SweepKind::Fig3b: return run_fig3b(scenario);
    case SweepKind::Fig4: return run_fig4(scenario);
    case SweepKind::Spectrum: return run_spectrum(scenario);
    case SweepKind::Budget: return run_budget(scenario);
  }
  throw ConfigError("unsupported sweep kind");
}

std::string to_csv(const SweepResult& r) {
  std::string out = r.axis;
  if (!r.label_column.empty()) out += "," + r.label_column;
  for (const auto& c : r.columns) out += "," + c;
  out += '\n';
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    out += fmt::format("{}", r.axis_values[i]);
    if (!r.label_column.empty()) out += "," + csv_field(r.labels[i]);
    for (double v : r.rows[i]) out += fmt::format(",{}", v);
    out += '\n';
  }
  return out;
}

std::string to_json(const SweepResult& r, const Scenario& scenario) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["version"] = kVersion;
  j["kind"] = to_string(scenario.sweep.kind);
  j["axis"] = r.axis;
  j["columns"] = r.columns;
  auto& rows = j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    nlohmann::ordered_json row;
    row[r.axis] = r.axis_values[i];
    if (!r.label_column.empty()) row[r.label_column] = r.labels[i];
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      const double v = r.rows[i][c];
      if (std::isfinite(v)) {
        row[r.columns[c]] = v;
      } else {
        row[r.columns[c]] = nullptr;
      }
    }
    rows.push_back(std::move(row));
  }
  auto& meta = j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  meta["seed"] = scenario.seed;
  j["config"] = format_scenario(scenario);
  return j.dump(2) + "\n";
}

std::string to_svg(const SweepResult& r) {
  constexpr double kW = 640, kH = 400, kPad = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
                                     "#bcbd22", "#17becf"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    x0 = std::min(x0, r.axis_values[i]);
    x1 = std::max(x1, r.axis_values[i]);
    for (double v : r.rows[i]) {
      if (!std::isfinite(v)) continue;
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double x) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); };
  auto py = [&](double y) { return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n"
      "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n"
      "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{} [{:.4g}, {:.4g}]</text>\n"
      "<text x=\"4\" y=\"{}\" font-size=\"12\">[{:.4g}, {:.4g}]</text>\n",
      kW, kH, kPad, kPad, kW - 2 * kPad, kH - 2 * kPad, kPad, kPad - 8, r.scenario, kW / 2,
      kH - 15, r.axis, x0, x1, kPad - 20, y0, y1);
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    std::string points;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const double v = r.rows[i][c];
      if (std::isfinite(v)) points += fmt::format("{:.2f},{:.2f} ", px(r.axis_values[i]), py(v));
    }
    const char* color = kColors[c % std::size(kColors)];
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" points=\"{}\"/>\n", color, points);
    out += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"{}\">{}</text>\n",
                       kW - kPad + 4, kPad + 14 * (c + 1), color, r.columns[c]);
  }
  return out + "</svg>\n";
}

WrittenFiles write_outputs(const SweepResult& result, const Scenario& scenario,
                           const std::filesystem::path& dir, bool svg) {
  std::filesystem::create_directories(dir);
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  };
  WrittenFiles files;
  files.csv = dir / (scenario.name + ".csv");
  files.json = dir / (scenario.name + ".json");
  write(files.csv, to_csv(result));
  write(files.json, to_json(result, scenario));
  if (svg) {
    files.svg = dir / (scenario.name + ".svg");
    write(files.svg, to_svg(result));
  }
  return files;
}

}  // namespace qdion
