#pragma once

// Geometry of the manifold of symmetric positive definite matrices with the
// trace metric <v, w>_p = tr(p^-1 v p^-1 w).

#include <vector>

#include <Eigen/Dense>

namespace resent {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes the input, so
/// m(i, j) == m(j, i) holds bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zero(int n);
  static SymMatrix identity(int n);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& o) const;
  SymMatrix operator-(const SymMatrix& o) const;
  SymMatrix operator*(double s) const;
  SymMatrix operator-() const { return *this * -1.0; }

 private:
  Matrix m_;
};

inline SymMatrix operator*(double s, const SymMatrix& m) { return m * s; }

/// Eigenvalues sorted descending, eigenvectors in the matching columns.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
};

/// input = left * Diag(values) * right^T, values non-increasing.
struct SingularValueDecomposition {
  Matrix left;
  Vector values;
  Matrix right;
};

EigenDecomposition eigen_sym(const SymMatrix& m);
SingularValueDecomposition svd(const Matrix& m);

/// Symmetric positive definite matrix. The eigendecomposition computed for
/// validation is kept, so fractional powers cost two matrix products.
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(const SymMatrix& m);
  explicit SpdMatrix(const Matrix& m) : SpdMatrix(SymMatrix(m)) {}

  static SpdMatrix identity(int n);

  int dim() const { return sym_.dim(); }
  const Matrix& matrix() const { return sym_.matrix(); }
  const SymMatrix& sym() const { return sym_; }
  const EigenDecomposition& eig() const { return eig_; }

  /// V Diag(lambda^t) V^T, symmetrized.
  Matrix power(double t) const;
  Matrix sqrt() const { return power(0.5); }
  Matrix inv_sqrt() const { return power(-0.5); }
  Matrix inverse() const { return power(-1.0); }

 private:
  SymMatrix sym_;
  EigenDecomposition eig_;
};

/// Relative eigenvalue floor below which a matrix is not accepted as SPD.
inline constexpr double kSpdRelativeFloor = 1e-14;

SpdMatrix spd_power(const SpdMatrix& p, double t);

/// p #_theta q = p^{1/2} [p^{-1/2} q p^{-1/2}]^theta p^{1/2}, theta in [0, 1].
SpdMatrix geodesic_point(const SpdMatrix& p, const SpdMatrix& q, double theta);

/// p^{1/2} exp(theta p^{-1/2} v p^{-1/2}) p^{1/2}.
SpdMatrix geodesic_from_velocity(const SpdMatrix& p, const SymMatrix& v,
                                 double theta);

double trace_inner(const SpdMatrix& p, const SymMatrix& v, const SymMatrix& w);

/// Solves p^{1/2} X + X p^{1/2} = h in the eigenbasis of p.
SymMatrix lyapunov_sqrt_solve(const SpdMatrix& p, const SymMatrix& h);

/// Gram-Schmidt on the standard symmetric basis (E_kk first, then
/// E_kl + E_lk for k < l in row-major order) under <., .>_p.
std::vector<SymMatrix> onb_at(const SpdMatrix& p);

/// Base-2 logarithms of the singular values, non-increasing. Throws
/// kSingularMatrix when alpha_n <= 1e-14 alpha_1.
Vector log_singular_vector(const Matrix& g);

/// Matrix exponential of a symmetric matrix.
SymMatrix sym_exp(const SymMatrix& v);

}  // namespace resent
