#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdion/scenario.hpp"

namespace qdion {

inline constexpr std::string_view kVersion = "qdion 0.1.0";

/// Tabular result of one scenario: one row per axis value.
struct SweepResult {
  std::string scenario;
  std::string axis;
  std::vector<double> axis_values;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  /// Optional text column (budget stage names).
  std::string label_column;
  std::vector<std::string> labels;
  /// Scalars describing how the result was obtained (seed, grid, fit, ...).
  std::vector<std::pair<std::string, double>> metadata;

  double column(std::size_t row, std::string_view name) const;
  std::optional<double> meta(std::string_view key) const;
};

/// Dispatches to the engine selected by scenario.sweep.kind.
SweepResult run_scenario(const Scenario& scenario);

/// Header row plus one line per row; '.' decimal, shortest round-trip digits.
std::string to_csv(const SweepResult& result);
/// Result, metadata and the resolved scenario text.
std::string to_json(const SweepResult& result, const Scenario& scenario);
/// Line plot of every column against the axis.
std::string to_svg(const SweepResult& result);

struct WrittenFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
  std::filesystem::path svg;  ///< empty unless requested
};

WrittenFiles write_outputs(const SweepResult& result, const Scenario& scenario,
                           const std::filesystem::path& dir, bool svg);

}  // namespace qdion
