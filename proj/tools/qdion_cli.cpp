// qdion: run scenarios and presets, print spectra and the link budget.
//
//   qdion run fig2b --out results --seed 7
//   qdion run my_scenario.ini --reps 10000 --svg
//   qdion presets list | show <name> | export <name> <file>
//   qdion spectrum --s 11 --delta 250
//   qdion budget
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <iostream>

#include "qdion/errors.hpp"
#include "qdion/runner.hpp"

namespace {

namespace fs = std::filesystem;
using namespace qdion;

Scenario resolve(const std::string& what, bool lenient) {
  if (fs::exists(what)) {
    std::vector<std::string> warnings;
    auto sc = load_scenario(what, LoadOptions{lenient}, &warnings);
    for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
    return sc;
  }
  if (preset_text(what)) return load_preset(what);
  throw ConfigError(fmt::format("'{}' is neither a scenario file nor a preset", what));
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("QDION_OUT_DIR"); env && *env) return env;
  return "results";
}

void print_meta(const SweepResult& r) {
  for (const auto& [k, v] : r.metadata) fmt::print("  {:<24} {}\n", k, v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-dot to trapped-ion photonic link simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* run = app.add_subcommand("run", "Run a scenario file or bundled preset");
  std::string target;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> reps;
  std::string out_dir;
  bool svg = false;
  bool lenient = false;
  run->add_option("scenario", target, "Scenario file or preset name")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--reps", reps, "Override sequence.n_reps")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory (default $QDION_OUT_DIR or ./results)");
  run->add_flag("--svg", svg, "Also write an SVG plot");
  run->add_flag("--lenient", lenient, "Warn about unknown keys instead of failing");

  auto* presets = app.add_subcommand("presets", "Bundled scenarios");
  presets->require_subcommand(1);
  auto* presets_list = presets->add_subcommand("list", "List preset names");
  auto* presets_show = presets->add_subcommand("show", "Print a preset");
  std::string preset_name;
  presets_show->add_option("name", preset_name)->required();
  auto* presets_export = presets->add_subcommand("export", "Write a preset to a file");
  std::string export_path;
  presets_export->add_option("name", preset_name)->required();
  presets_export->add_option("file", export_path)->required();

  auto* spectrum = app.add_subcommand("spectrum", "Print the emission spectrum as CSV");
  double s = 1.0, delta = 0.0;
  spectrum->add_option("--s", s, "Saturation parameter")->required();
  spectrum->add_option("--delta", delta, "QD-laser detuning, MHz");

  auto* budget = app.add_subcommand("budget", "Print the optical path budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      Scenario sc = resolve(target, lenient);
      if (seed) sc.seed = *seed;
      if (reps) sc.sequence.n_reps = *reps;
      sc.validate();
      const auto result = run_scenario(sc);
      const fs::path dir = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
      const auto files = write_outputs(result, sc, dir, svg);
      fmt::print("{}: {} rows\n", sc.name, result.rows.size());
      print_meta(result);
      fmt::print("wrote {}\nwrote {}\n", files.csv.string(), files.json.string());
      if (!files.svg.empty()) fmt::print("wrote {}\n", files.svg.string());
    } else if (*presets_list) {
      for (const auto& name : preset_names()) fmt::print("{}\n", name);
    } else if (*presets_show) {
      const auto text = preset_text(preset_name);
      if (!text) throw ConfigError(fmt::format("unknown preset '{}'", preset_name));
      fmt::print("{}", *text);
    } else if (*presets_export) {
      save_scenario(load_preset(preset_name), export_path);
      fmt::print("wrote {}\n", export_path);
    } else if (*spectrum) {
      Scenario sc = load_preset("spectrum");
      sc.emitter.s = s;
      sc.emitter.delta = delta;
      const auto result = run_scenario(sc);
      fmt::print("{}", to_csv(result));
      for (const auto& [k, v] : result.metadata) fmt::print(stderr, "{} = {}\n", k, v);
    } else if (*budget) {
      const auto b = reference_link_budget();
      double cumulative = 1.0;
      for (const auto& [name, f] : b.stages) {
        cumulative *= f;
        fmt::print("{:<40} {:>8.4f} {:>10.6f}\n", name, f, cumulative);
      }
      const auto totals = budget_product(b);
      fmt::print("{:<40} {:>8.4f}\n", "path transmission", totals.path_transmission);
      fmt::print("{:<40} {:>8.4f}\n", "extraction into first lens", b.extraction_into_first_lens);
      fmt::print("{:<40} {:>8.2e}\n", "overall", totals.overall);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const ParameterError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  (void)budget;
  return 0;
}
