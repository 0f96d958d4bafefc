#pragma once

// Run configuration and the on-disk formats: iterations.csv, timing.csv,
// best_metric.json, summary.json, convergence.svg.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "resent/objective.hpp"
#include "resent/optimizer.hpp"
#include "resent/systems.hpp"

namespace resent {

using json = nlohmann::json;

/// A run request as written in a config file. Unset fields fall back to the
/// system's defaults when resolved.
struct RunConfig {
  std::string system;
  std::map<std::string, double> params;
  std::optional<int> degree;
  bool include_constant = false;
  PolyFrame frame;  // "poly_frame": {"center": [...], "scale": [...]}
  std::optional<std::vector<int>> grid;
  bool refine = true;
  std::optional<StepRule> step;
  std::optional<int> max_iters;
  std::optional<json> initial;  // {"coeffs": [...], "p": [row-major]}
  int workers = 0;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

/// Throws Error(kConfig) on schema violations.
RunConfig parse_run_config(const json& j);

/// Config with every default filled in from the system; the summary echo.
json resolved_config_json(const RunConfig& config, const SystemCase& c);

/// Builds the system and validates the config against its dimension and
/// domain kind.
SystemCase make_case(const RunConfig& config);
RunSettings resolve_settings(const RunConfig& config, const SystemCase& c);

struct MetricFile {
  std::string system;
  std::map<std::string, double> params;
  ConformalMetric metric;
  std::optional<GridConfig> grid;
};

json metric_to_json(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid);
/// Refuses files whose ordering tag is not "grlex-v1".
MetricFile metric_from_json(const json& j);
ConformalMetric metric_from_parts(int n, int degree, bool include_constant, const json& coeffs,
                                  const json& p_row_major, const PolyFrame& frame = {});

std::string iterations_csv(const std::vector<IterationRecord>& records, int dim);
std::string timing_csv(const std::vector<IterationRecord>& records);

json summary_json(const RunConfig& config, const SystemCase& c, const RunResult& result);

struct ConvergencePoint {
  int k = 0;
  double value = 0.0;
  double best_value = 0.0;
};

std::vector<ConvergencePoint> convergence_points(const std::vector<IterationRecord>& records);
/// Reads the k, value and best_value columns back from iterations.csv.
std::vector<ConvergencePoint> parse_iterations_csv(const std::string& csv);

/// Log-log plot of value and best value against the iteration index.
std::string render_convergence_svg(const std::vector<ConvergencePoint>& points,
                                   const std::string& title);

json bounds_json(const SystemCase& c);

}  // namespace resent
