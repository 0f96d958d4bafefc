#include "resent/optimizer.hpp"

#include <chrono>
#include <cmath>

#include "resent/error.hpp"

namespace resent {

ConformalMetric step(const ConformalMetric& current, const TangentVector& s, double theta) {
  if (!(s.norm > 0.0)) fail(ErrorCode::kNumerical, "cannot step along a zero subgradient");
  if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorCode::kRange, "step size must be positive");
  const double inv = 1.0 / s.norm;
  const Vector a = current.coeffs.a - theta * inv * s.s1;
  const SymMatrix velocity = s.s2 * (-inv);
  SpdMatrix p;
  try {
    p = geodesic_from_velocity(current.p, velocity, theta);
  } catch (const Error& e) {
    fail(ErrorCode::kNumerical, std::string("metric left the SPD cone after a step: ") + e.what());
  }
  return {PolyCoeffs(current.coeffs.basis, a), std::move(p)};
}

double zero_subgradient_threshold(double value) { return 1e-14 * (1.0 + std::abs(value)); }

RunResult run(const SystemCase& c, const RunSettings& settings, const ProgressFn& progress) {
  const int n = c.dim();
  if (c.domain.is_cylinder() && settings.degree != 0) {
    fail(ErrorCode::kConfig, "polynomial degree must be 0 on a cylinder domain");
  }
  if (settings.max_iters < 0) fail(ErrorCode::kConfig, "max_iters must be nonnegative");
  if (!(settings.step.a > 0.0) || !(settings.step.b >= 0.0)) {
    fail(ErrorCode::kConfig, "step rule needs a > 0 and b >= 0");
  }

  ConformalMetric metric;
  if (settings.initial) {
    metric = *settings.initial;
    if (metric.dim() != n) fail(ErrorCode::kConfig, "initial metric has the wrong dimension");
    if (!(metric.coeffs.basis == PolyBasis(n, settings.degree, settings.include_constant, settings.frame))) {
      fail(ErrorCode::kConfig, "initial metric basis does not match degree/include_constant/poly_frame");
    }
  } else {
    metric = ConformalMetric::identity(PolyBasis(n, settings.degree, settings.include_constant, settings.frame));
  }

  const double scale = entropy_scale(c);
  RunResult result;
  result.best_metric = metric;
  const int evaluations = settings.max_iters + 1;

  for (int k = 1; k <= evaluations; ++k) {
    const auto started = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.k = k;
    TangentVector s;
    try {
      const InnerMaxResult inner = maximize(c, metric, settings.grid);
      s = full_subgradient(c, metric, inner);
      rec.value = inner.value * scale;
      rec.x_star = inner.x_star;
      rec.k_star = inner.k_star;
      rec.gap_ok = inner.gap_ok;
      rec.subgrad_norm = s.norm;
    } catch (const std::exception& e) {
      result.abort_reason = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }

    if (result.records.empty() || rec.value < result.best_value) {
      result.best_value = rec.value;
      result.best_metric = metric;
      result.best_iteration = k;
    }
    rec.best_value = result.best_value;

    const bool last = k == evaluations;
    const bool stationary = s.norm <= zero_subgradient_threshold(rec.value);
    if (!last && !stationary) {
      rec.theta = settings.step.at(k);
      try {
        metric = step(metric, s, rec.theta);
      } catch (const std::exception& e) {
        result.abort_reason = "step " + std::to_string(k) + ": " + e.what();
      }
    }
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    result.records.push_back(rec);
    if (progress) progress(result.records.back());
    if (result.abort_reason) break;
    if (stationary) {
      result.stopped_on_zero_subgradient = true;
      break;
    }
  }
  return result;
}

double evaluate_metric(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid) {
  return entropy_estimate(c, m, grid);
}

}  // namespace resent
