#pragma once

// Pointwise entropy functionals for a conformal metric e^{r_a(x)} p and their
// maximization over a compact domain by grid search.

#include <cstddef>
#include <span>
#include <vector>

#include "resent/poly.hpp"
#include "resent/spd.hpp"
#include "resent/systems.hpp"

namespace resent {

/// P(x) = exp(r_a(x)) p, the point (a, p) of the parameter manifold.
struct ConformalMetric {
  PolyCoeffs coeffs;
  SpdMatrix p;

  ConformalMetric() = default;
  ConformalMetric(PolyCoeffs c, SpdMatrix m);

  /// a = 0, p = I.
  static ConformalMetric identity(const PolyBasis& basis);

  int dim() const { return p.dim(); }
};

struct PointSigma {
  double value = 0.0;  // sum of the positive spectrum entries
  int k_star = 0;      // number of positive entries
  Vector spectrum;     // descending
};

struct GridConfig {
  std::vector<int> counts;
  bool refine = true;
  int workers = 0;  // 0 selects the hardware concurrency
};

struct InnerMaxResult {
  Vector x_star;
  Vector x_star_param;
  std::size_t index = 0;  // linear index within the grid that produced x_star
  bool from_refinement = false;
  int k_star = 0;
  /// Discrete: bits. Continuous: sum of positive zeta_i before the
  /// 1 / (2 ln 2) scaling.
  double value = 0.0;
  Vector spectrum;
  bool gap_ok = true;
};

/// Spectrum entries are treated as separated when their relative gap is at
/// least this large.
inline constexpr double kGapTolerance = 1e-8;

/// Evaluates the pointwise functional for one metric. p^{1/2} and p^{-1/2}
/// are factored once at construction; `evaluate` is thread-safe provided
/// each thread passes its own Workspace.
class SigmaEvaluator {
 public:
  struct Workspace {
    std::vector<double> buffer;
  };

  SigmaEvaluator(const SystemCase& c, const ConformalMetric& m);

  int dim() const { return n_; }
  bool discrete() const { return discrete_; }
  Workspace workspace() const;

  /// Writes the descending spectrum and returns the positive-part sum.
  double evaluate(std::span<const double> x, Workspace& ws, std::span<double> spectrum,
                  int& k_star) const;

  PointSigma at(std::span<const double> x) const;

 private:
  void discrete_point(std::span<const double> x, Workspace& ws, std::span<double> spectrum) const;
  void continuous_point(std::span<const double> x, Workspace& ws,
                        std::span<double> spectrum) const;

  const SystemCase* case_;
  const ConformalMetric* metric_;
  int n_ = 0;
  bool discrete_ = true;
  Matrix root_;
  Matrix inv_root_;
};

/// log2 singular values of e^{dr/2} p^{1/2} A(x) p^{-1/2}, dr = r(phi(x)) - r(x).
PointSigma discrete_sigma_at(const SystemCase& c, const ConformalMetric& m,
                             std::span<const double> x);

/// Eigenvalues of p^{1/2} A p^{-1/2} + p^{-1/2} A^T p^{1/2} + rdot(x) I.
PointSigma continuous_sigma_at(const SystemCase& c, const ConformalMetric& m,
                               std::span<const double> x);

PointSigma sigma_at(const SystemCase& c, const ConformalMetric& m, std::span<const double> x);

/// True when spectrum[k-1] and spectrum[k] are separated (always true for
/// k = 0 or k = n). Discrete spectra are compared as singular-value ratios.
bool spectral_gap_ok(std::span<const double> spectrum, int k, bool discrete);

/// Grid argmax of the pointwise functional followed by one refinement pass.
/// Ties go to the smallest linear index, so the result does not depend on
/// the worker count.
InnerMaxResult maximize(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid);

/// 1 for discrete systems, 1 / (2 ln 2) for continuous ones.
double entropy_scale(const SystemCase& c);

double entropy_estimate(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid);

int resolve_workers(int requested);

}  // namespace resent
