#pragma once

// Riemannian subgradient iteration on R^N x S+_n with a diminishing step.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resent/objective.hpp"
#include "resent/subgradient.hpp"
#include "resent/systems.hpp"

namespace resent {

/// theta_k = a / (k + b), k = 1, 2, ...
struct StepRule {
  double a = 1.0;
  double b = 0.0;

  double at(int k) const { return a / (static_cast<double>(k) + b); }
};

struct IterationRecord {
  int k = 0;             // 1-based; record 1 is the initial metric
  double theta = 0.0;    // step taken after this evaluation (0 on the last record)
  double value = 0.0;    // entropy estimate of the metric at iteration k
  double best_value = 0.0;
  Vector x_star;
  int k_star = 0;
  double subgrad_norm = 0.0;
  bool gap_ok = true;
  double wall_time_ms = 0.0;
};

struct RunSettings {
  int degree = 0;
  bool include_constant = false;
  PolyFrame frame;
  GridConfig grid;
  StepRule step;
  int max_iters = 0;  // number of steps; max_iters + 1 metrics are evaluated
  std::optional<ConformalMetric> initial;  // a = 0, p = I when absent
};

struct RunResult {
  double best_value = 0.0;
  ConformalMetric best_metric;
  int best_iteration = 0;
  std::vector<IterationRecord> records;
  std::optional<std::string> abort_reason;  // set when an iteration failed
  bool stopped_on_zero_subgradient = false;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

/// Moves along the product geodesic in direction -s/|s| for length theta.
ConformalMetric step(const ConformalMetric& current, const TangentVector& s, double theta);

/// Subgradient norms at or below this bound terminate the iteration.
double zero_subgradient_threshold(double value);

RunResult run(const SystemCase& c, const RunSettings& settings, const ProgressFn& progress = {});

double evaluate_metric(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid);

}  // namespace resent
