#pragma once

// Scenario files: an INI-style text format with one section per model
// component. Keys carry their unit as a suffix (_mhz, _us, _ns, _per_s).
//
//   name = fig2b
//   seed = 2015
//
//   [sweep]
//   kind = fig2                  ; fig2 | fig3a | fig3b | fig4 | spectrum | budget
//   values = 0, 100, 200         ; or linspace(a, b, n), or auto
//
//   [emitter] [ion] [link] [sequence] [readout] [spin] [budget]
//
// Keys omitted from a section keep their default values; unknown keys are
// an error unless lenient loading is requested.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdion/ion_node.hpp"
#include "qdion/photonic_link.hpp"
#include "qdion/protocol_engine.hpp"
#include "qdion/qd_emitter.hpp"

namespace qdion {

enum class SweepKind { Fig2, Fig3a, Fig3b, Fig4, Spectrum, Budget };

std::string_view to_string(SweepKind kind);
std::optional<SweepKind> parse_sweep_kind(std::string_view text);
/// Name of the swept variable, used as the first CSV column.
std::string_view axis_name(SweepKind kind);

struct SweepSpec {
  SweepKind kind = SweepKind::Fig2;
  std::vector<double> values;
  /// Axis derived at run time (default spectrum grid, budget stage index).
  bool automatic = false;
  bool operator==(const SweepSpec&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  SweepSpec sweep;
  EmitterParams emitter;
  IonCavityParams ion;
  LinkModelParams link;
  SequenceConfig sequence;
  /// Take the sequence's p_abs from the photonic-link model at run time.
  bool p_abs_from_model = false;
  ReadoutRates readout;
  std::optional<SpinPrepConfig> spin;
  std::optional<LinkBudget> budget;

  /// Throws ConfigError naming the violated invariant.
  void validate() const;
  bool operator==(const Scenario&) const = default;
};

struct LoadOptions {
  /// Unknown keys become warnings instead of errors.
  bool lenient = false;
};

struct LoadResult {
  Scenario scenario;
  std::vector<std::string> warnings;
};

LoadResult parse_scenario(const std::string& text, const LoadOptions& options = {});
Scenario load_scenario(const std::filesystem::path& path, const LoadOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);

/// Canonical text form; parse_scenario(format_scenario(s)) == s.
std::string format_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Axis values after resolving `automatic`.
std::vector<double> resolved_axis(const Scenario& scenario);

// Bundled scenarios reproducing the experiment's figures.
std::vector<std::string> preset_names();
std::optional<std::string> preset_text(std::string_view name);
Scenario load_preset(std::string_view name);

}  // namespace qdion
