#include "resent/subgradient.hpp"

#include <cmath>
#include <numbers>

#include "resent/error.hpp"

namespace resent {

namespace {

void check_k(int k_star, int n) {
  if (k_star < 0 || k_star > n) fail(ErrorCode::kRange, "k* outside [0, n]");
}

}  // namespace

double tangent_norm(const SpdMatrix& p, const Vector& s1, const SymMatrix& s2) {
  return std::sqrt(s1.squaredNorm() + std::max(0.0, trace_inner(p, s2, s2)));
}

Vector discrete_linear_subgrad(const PolyBasis& basis, std::span<const double> x,
                               std::span<const double> phi_x, int k_star) {
  check_k(k_star, basis.n_vars());
  if (k_star == 0) return Vector::Zero(basis.size());
  return (static_cast<double>(k_star) / (2.0 * std::numbers::ln2)) *
         (monomial_vector(basis, phi_x) - monomial_vector(basis, x));
}

Vector continuous_linear_subgrad(const PolyBasis& basis, std::span<const double> x,
                                 std::span<const double> f_x, int k_star) {
  check_k(k_star, basis.n_vars());
  if (k_star == 0) return Vector::Zero(basis.size());
  return static_cast<double>(k_star) * orbital_derivative_vector(basis, x, f_x);
}

Matrix singular_sum_gradient(const Matrix& x, int k_star, bool* gap_ok) {
  const int n = static_cast<int>(x.rows());
  check_k(k_star, n);
  const SingularValueDecomposition s = svd(x);
  if (gap_ok != nullptr) {
    *gap_ok = k_star == 0 || k_star == n ||
              s.values(k_star - 1) >= (1.0 + kGapTolerance) * s.values(k_star);
  }
  Vector d = Vector::Zero(n);
  for (int i = 0; i < k_star; ++i) d(i) = 1.0 / (std::numbers::ln2 * s.values(i));
  return s.left * d.asDiagonal() * s.right.transpose();
}

Matrix eigen_sum_gradient(const SymMatrix& x, int k_star, bool* gap_ok) {
  const int n = x.dim();
  check_k(k_star, n);
  const EigenDecomposition e = eigen_sym(x);
  if (gap_ok != nullptr) {
    *gap_ok = spectral_gap_ok({e.values.data(), static_cast<std::size_t>(n)}, k_star, false);
  }
  const Matrix u = e.vectors.leftCols(k_star);
  return u * u.transpose();
}

Matrix zeta(const SpdMatrix& p, const Matrix& a) { return p.sqrt() * a * p.inv_sqrt(); }

Matrix zeta_derivative(const SpdMatrix& p, const Matrix& a, const SymMatrix& h) {
  const Matrix root = p.sqrt();
  const Matrix inv_root = p.inv_sqrt();
  const Matrix y = lyapunov_sqrt_solve(p, h).matrix();
  return y * a * inv_root - root * a * inv_root * y * inv_root;
}

SymMatrix zeta_hat(const SpdMatrix& p, const Matrix& a) {
  const Matrix z = zeta(p, a);
  return SymMatrix(Matrix(z + z.transpose()));
}

Matrix zeta_hat_derivative(const SpdMatrix& p, const Matrix& a, const SymMatrix& v) {
  const Matrix root = p.sqrt();
  const Matrix inv_root = p.inv_sqrt();
  const Matrix y = lyapunov_sqrt_solve(p, v).matrix();
  return y * a * inv_root - root * a * inv_root * y * inv_root -
         inv_root * y * inv_root * a.transpose() * root + inv_root * a.transpose() * y;
}

SymMatrix riesz_representative(const SpdMatrix& p,
                               const std::function<double(const SymMatrix&)>& functional) {
  Matrix acc = Matrix::Zero(p.dim(), p.dim());
  for (const SymMatrix& e : onb_at(p)) acc += functional(e) * e.matrix();
  return SymMatrix(acc);
}

namespace {

// Shared assembly: the functional v -> tr[S^T D(v)] with D the derivative
// formula, reusing p^{1/2}, p^{-1/2} and the eigendecomposition of p.
template <typename Derivative>
SymMatrix assemble(const SpdMatrix& p, const Matrix& s, Derivative&& derivative) {
  return riesz_representative(p, [&](const SymMatrix& v) {
    return (s.transpose() * derivative(v)).trace();
  });
}

}  // namespace

MatrixSubgradient discrete_matrix_subgrad(const SpdMatrix& p, const Matrix& a, int k_star) {
  const int n = p.dim();
  check_k(k_star, n);
  if (a.rows() != n || a.cols() != n) fail(ErrorCode::kDimensionMismatch, "Jacobian size");
  if (k_star == 0) return {SymMatrix::zero(n), true};

  const Matrix root = p.sqrt();
  const Matrix inv_root = p.inv_sqrt();
  const Matrix x = root * a * inv_root;
  log_singular_vector(x);  // rejects singular A
  MatrixSubgradient out;
  const Matrix s = singular_sum_gradient(x, k_star, &out.gap_ok);
  const Matrix a_inv_root = a * inv_root;
  const Matrix root_a_inv_root = root * a_inv_root;
  out.value = assemble(p, s, [&](const SymMatrix& h) -> Matrix {
    const Matrix y = lyapunov_sqrt_solve(p, h).matrix();
    return y * a_inv_root - root_a_inv_root * y * inv_root;
  });
  return out;
}

MatrixSubgradient continuous_matrix_subgrad(const SpdMatrix& p, const Matrix& a, int k_star) {
  const int n = p.dim();
  check_k(k_star, n);
  if (a.rows() != n || a.cols() != n) fail(ErrorCode::kDimensionMismatch, "Jacobian size");
  if (k_star == 0) return {SymMatrix::zero(n), true};

  const Matrix root = p.sqrt();
  const Matrix inv_root = p.inv_sqrt();
  const Matrix z = root * a * inv_root;
  MatrixSubgradient out;
  const Matrix s = eigen_sum_gradient(SymMatrix(Matrix(z + z.transpose())), k_star, &out.gap_ok);
  const Matrix a_inv_root = a * inv_root;
  out.value = assemble(p, s, [&](const SymMatrix& v) -> Matrix {
    const Matrix y = lyapunov_sqrt_solve(p, v).matrix();
    const Matrix half = y * a_inv_root - z * y * inv_root;
    return half + half.transpose();
  });
  return out;
}

TangentVector full_subgradient(const SystemCase& c, const ConformalMetric& m,
                               const InnerMaxResult& inner) {
  const int n = c.dim();
  const std::span<const double> x(inner.x_star.data(), static_cast<std::size_t>(n));
  const PolyBasis& basis = m.coeffs.basis;
  TangentVector out;
  if (c.discrete()) {
    const auto& sys = std::get<DiscreteSystem>(c.system);
    const Vector phi_x = eval_field(sys.map, n, x);
    const Matrix a = eval_jacobian(sys.jacobian, n, x);
    out.s1 = discrete_linear_subgrad(basis, x, {phi_x.data(), static_cast<std::size_t>(n)},
                                     inner.k_star);
    out.s2 = discrete_matrix_subgrad(m.p, a, inner.k_star).value;
  } else {
    const auto& sys = std::get<ContinuousSystem>(c.system);
    const Vector f_x = eval_field(sys.field, n, x);
    const Matrix a = eval_jacobian(sys.jacobian, n, x);
    out.s1 = continuous_linear_subgrad(basis, x, {f_x.data(), static_cast<std::size_t>(n)},
                                       inner.k_star);
    out.s2 = continuous_matrix_subgrad(m.p, a, inner.k_star).value;
  }
  out.norm = tangent_norm(m.p, out.s1, out.s2);
  return out;
}

}  // namespace resent
