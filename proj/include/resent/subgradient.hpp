#pragma once

// Riemannian subgradients of the metric-optimization objective at (a, p),
// given the maximizer (x*, k*) of the inner problem.

#include <functional>
#include <span>

#include "resent/objective.hpp"
#include "resent/poly.hpp"
#include "resent/spd.hpp"
#include "resent/systems.hpp"

namespace resent {

/// Tangent vector at (a, p): Euclidean part s1 and symmetric part s2.
struct TangentVector {
  Vector s1;
  SymMatrix s2;
  double norm = 0.0;  // sqrt(|s1|^2 + <s2, s2>_p)
};

/// Product-metric norm at p.
double tangent_norm(const SpdMatrix& p, const Vector& s1, const SymMatrix& s2);

struct MatrixSubgradient {
  SymMatrix value;
  bool gap_ok = true;
};

/// (k / (2 ln 2)) [m(phi(x)) - m(x)].
Vector discrete_linear_subgrad(const PolyBasis& basis, std::span<const double> x,
                               std::span<const double> phi_x, int k_star);

/// k * (orbital derivative vector at x along F(x)).
Vector continuous_linear_subgrad(const PolyBasis& basis, std::span<const double> x,
                                 std::span<const double> f_x, int k_star);

/// Euclidean gradient of X -> sum_{i<=k} log2 alpha_i(X), in standard SVD
/// terms: (1/ln 2) U Diag(1/alpha_1, .., 1/alpha_k, 0, ..) V^T.
Matrix singular_sum_gradient(const Matrix& x, int k_star, bool* gap_ok = nullptr);

/// Euclidean gradient of X -> sum_{i<=k} lambda_i(X) for symmetric X:
/// U Diag(1, .., 1, 0, ..) U^T.
Matrix eigen_sum_gradient(const SymMatrix& x, int k_star, bool* gap_ok = nullptr);

/// zeta(p) = p^{1/2} A p^{-1/2} and its derivative along h.
Matrix zeta(const SpdMatrix& p, const Matrix& a);
Matrix zeta_derivative(const SpdMatrix& p, const Matrix& a, const SymMatrix& h);

/// zeta_hat(p) = zeta(p) + zeta(p)^T and its derivative along v.
SymMatrix zeta_hat(const SpdMatrix& p, const Matrix& a);
Matrix zeta_hat_derivative(const SpdMatrix& p, const Matrix& a, const SymMatrix& v);

/// Riesz representative of a linear functional on symmetric matrices with
/// respect to <., .>_p, assembled over onb_at(p).
SymMatrix riesz_representative(const SpdMatrix& p,
                               const std::function<double(const SymMatrix&)>& functional);

MatrixSubgradient discrete_matrix_subgrad(const SpdMatrix& p, const Matrix& a, int k_star);
MatrixSubgradient continuous_matrix_subgrad(const SpdMatrix& p, const Matrix& a, int k_star);

/// Subgradient of the objective at m for the piece selected by `inner`.
TangentVector full_subgradient(const SystemCase& c, const ConformalMetric& m,
                               const InnerMaxResult& inner);

}  // namespace resent
