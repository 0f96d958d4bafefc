#include "resent/spd.hpp"

#include <cmath>
#include <sstream>

#include "resent/error.hpp"

namespace resent {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix reconstruct(const EigenDecomposition& e, const Vector& diag) {
  return symmetrized(e.vectors * diag.asDiagonal() * e.vectors.transpose());
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "symmetric matrix must be square, got " << m.rows() << "x" << m.cols();
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
  if (!m.allFinite()) fail(ErrorCode::kInvalidInput, "matrix has non-finite entries");
  m_ = symmetrized(m);
}

SymMatrix SymMatrix::zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }
SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
  if (o.dim() != dim()) fail(ErrorCode::kDimensionMismatch, "symmetric matrix sum");
  return SymMatrix(m_ + o.m_);
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const {
  if (o.dim() != dim()) fail(ErrorCode::kDimensionMismatch, "symmetric matrix difference");
  return SymMatrix(m_ - o.m_);
}

SymMatrix SymMatrix::operator*(double s) const { return SymMatrix(m_ * s); }

EigenDecomposition eigen_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::kNumerical, "symmetric eigensolver did not converge");
  }
  // Eigen sorts ascending.
  const int n = m.dim();
  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (int i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

SingularValueDecomposition svd(const Matrix& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::kDimensionMismatch, "svd expects a square matrix");
  if (!m.allFinite()) fail(ErrorCode::kInvalidInput, "svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

SpdMatrix::SpdMatrix(const SymMatrix& m) : sym_(m) {
  eig_ = eigen_sym(sym_);
  const double largest = eig_.values(0);
  const double smallest = eig_.values(eig_.values.size() - 1);
  if (!(smallest > 0.0) || smallest <= kSpdRelativeFloor * largest) {
    std::ostringstream os;
    os << "matrix is not positive definite (eigenvalues in [" << smallest << ", "
       << largest << "])";
    fail(ErrorCode::kNotSpd, os.str());
  }
}

SpdMatrix SpdMatrix::identity(int n) { return SpdMatrix(SymMatrix::identity(n)); }

Matrix SpdMatrix::power(double t) const {
  if (!std::isfinite(t)) fail(ErrorCode::kInvalidInput, "non-finite matrix power");
  Vector d = eig_.values.array().pow(t);
  return reconstruct(eig_, d);
}

SpdMatrix spd_power(const SpdMatrix& p, double t) { return SpdMatrix(p.power(t)); }

SpdMatrix geodesic_point(const SpdMatrix& p, const SpdMatrix& q, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    std::ostringstream os;
    os << "geodesic parameter " << theta << " outside [0, 1]";
    fail(ErrorCode::kRange, os.str());
  }
  if (p.dim() != q.dim()) fail(ErrorCode::kDimensionMismatch, "geodesic endpoints differ in size");
  // With p = V D V^T and q = W E W^T, B = E^{1/2} (W^T V) D^{-1/2} satisfies
  // p^{-1/2} q p^{-1/2} ~ B^T B. B is graded on both sides around an
  // orthogonal core, so two-sided Jacobi gets its small singular values to
  // high relative accuracy, which forming p^{-1/2} q p^{-1/2} directly does
  // not. With B = L S R^T the geodesic is Y Y^T, Y = W E^{1/2} L S^{theta-1}.
  const EigenDecomposition& ep = p.eig();
  const EigenDecomposition& eq = q.eig();
  const Vector d_inv_root = ep.values.array().rsqrt();
  const Vector e_root = eq.values.array().sqrt();
  const Matrix b =
      e_root.asDiagonal() * (eq.vectors.transpose() * ep.vectors) * d_inv_root.asDiagonal();
  Eigen::JacobiSVD<Matrix> solver(b, Eigen::ComputeFullU);
  const Vector scale = solver.singularValues().array().pow(theta - 1.0);
  const Matrix y = eq.vectors * e_root.asDiagonal() * solver.matrixU() * scale.asDiagonal();
  return SpdMatrix(Matrix(y * y.transpose()));
}

SymMatrix sym_exp(const SymMatrix& v) {
  const EigenDecomposition e = eigen_sym(v);
  Vector d = e.values.array().exp();
  return SymMatrix(reconstruct(e, d));
}

SpdMatrix geodesic_from_velocity(const SpdMatrix& p, const SymMatrix& v, double theta) {
  if (v.dim() != p.dim()) fail(ErrorCode::kDimensionMismatch, "velocity and base point differ in size");
  if (!std::isfinite(theta)) fail(ErrorCode::kInvalidInput, "non-finite geodesic parameter");
  const Matrix root = p.sqrt();
  const Matrix inv_root = p.inv_sqrt();
  const SymMatrix scaled(Matrix(theta * inv_root * v.matrix() * inv_root));
  return SpdMatrix(Matrix(root * sym_exp(scaled).matrix() * root));
}

double trace_inner(const SpdMatrix& p, const SymMatrix& v, const SymMatrix& w) {
  if (v.dim() != p.dim() || w.dim() != p.dim()) {
    fail(ErrorCode::kDimensionMismatch, "trace inner product operands differ in size");
  }
  const Matrix inv = p.inverse();
  return (inv * v.matrix() * inv * w.matrix()).trace();
}

SymMatrix lyapunov_sqrt_solve(const SpdMatrix& p, const SymMatrix& h) {
  if (h.dim() != p.dim()) fail(ErrorCode::kDimensionMismatch, "Lyapunov operands differ in size");
  const auto& e = p.eig();
  const Vector roots = e.values.array().sqrt();
  Matrix rotated = e.vectors.transpose() * h.matrix() * e.vectors;
  const int n = p.dim();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rotated(i, j) /= roots(i) + roots(j);
  }
  return SymMatrix(Matrix(e.vectors * rotated * e.vectors.transpose()));
}

std::vector<SymMatrix> onb_at(const SpdMatrix& p) {
  const int n = p.dim();
  std::vector<Matrix> standard;
  standard.reserve(n * (n + 1) / 2);
  for (int k = 0; k < n; ++k) {
    Matrix e = Matrix::Zero(n, n);
    e(k, k) = 1.0;
    standard.push_back(e);
  }
  for (int k = 0; k < n; ++k) {
    for (int l = k + 1; l < n; ++l) {
      Matrix e = Matrix::Zero(n, n);
      e(k, l) = e(l, k) = 1.0;
      standard.push_back(e);
    }
  }

  const Matrix inv = p.inverse();
  auto inner = [&](const Matrix& v, const Matrix& w) {
    return (inv * v * inv * w).trace();
  };

  std::vector<Matrix> basis;
  basis.reserve(standard.size());
  for (const Matrix& e : standard) {
    Matrix v = e;
    // Two passes of modified Gram-Schmidt keep the Gram matrix at the
    // identity to working precision for ill-conditioned p.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Matrix& b : basis) v -= inner(v, b) * b;
    }
    const double norm = std::sqrt(inner(v, v));
    if (!(norm > 0.0)) fail(ErrorCode::kNumerical, "Gram-Schmidt breakdown");
    basis.push_back(symmetrized(v / norm));
  }

  std::vector<SymMatrix> out;
  out.reserve(basis.size());
  for (const Matrix& b : basis) out.emplace_back(b);
  return out;
}

Vector log_singular_vector(const Matrix& g) {
  const SingularValueDecomposition s = svd(g);
  const double largest = s.values(0);
  const double smallest = s.values(s.values.size() - 1);
  if (!(smallest > 1e-14 * largest)) {
    std::ostringstream os;
    os << "matrix is numerically singular (singular values " << largest << " .. "
       << smallest << ")";
    fail(ErrorCode::kSingularMatrix, os.str());
  }
  return s.values.array().log() / std::log(2.0);
}

}  // namespace resent
