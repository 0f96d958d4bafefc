#include "resent/poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "resent/error.hpp"

namespace resent {

namespace {

void check_dim(const PolyBasis& b, std::size_t got, const char* what) {
  if (static_cast<int>(got) != b.n_vars()) {
    std::ostringstream os;
    os << what << " has dimension " << got << ", polynomial basis expects " << b.n_vars();
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
}

// All exponent tuples of total degree `total`, lexicographically descending.
void append_degree(int n, int total, std::vector<int>& prefix,
                   std::vector<std::vector<int>>& out) {
  const int used = static_cast<int>(prefix.size());
  if (used == n - 1) {
    prefix.push_back(total);
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  for (int e = total; e >= 0; --e) {
    prefix.push_back(e);
    append_degree(n, total - e, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

long full_basis_size(int n_vars, int degree) {
  long c = 1;
  for (int i = 1; i <= n_vars; ++i) c = c * (degree + i) / i;
  return c;
}

bool PolyFrame::is_identity() const {
  return std::all_of(center.begin(), center.end(), [](double c) { return c == 0.0; }) &&
         std::all_of(scale.begin(), scale.end(), [](double s) { return s == 1.0; });
}

PolyBasis::PolyBasis(int n_vars, int degree, bool include_constant, PolyFrame frame)
    : n_vars_(n_vars), degree_(degree), include_constant_(include_constant) {
  if (n_vars < 1) fail(ErrorCode::kInvalidInput, "polynomial basis needs at least one variable");
  if (degree < 0) fail(ErrorCode::kInvalidInput, "polynomial degree must be nonnegative");
  for (const auto* v : {&frame.center, &frame.scale}) {
    if (!v->empty() && static_cast<int>(v->size()) != n_vars) {
      fail(ErrorCode::kDimensionMismatch, "polynomial frame center/scale must have one entry per variable");
    }
    for (double e : *v) {
      if (!std::isfinite(e)) fail(ErrorCode::kInvalidInput, "non-finite polynomial frame entry");
    }
  }
  for (double s : frame.scale) {
    if (!(s > 0.0)) fail(ErrorCode::kInvalidInput, "polynomial frame scale must be positive");
  }
  // Normalize so that equal frames compare equal.
  if (frame.is_identity()) frame = {};
  if (!frame.center.empty() || !frame.scale.empty()) {
    if (frame.center.empty()) frame.center.assign(n_vars, 0.0);
    if (frame.scale.empty()) frame.scale.assign(n_vars, 1.0);
    for (double s : frame.scale) inv_scale_.push_back(1.0 / s);
  }
  frame_ = std::move(frame);
  std::vector<int> prefix;
  for (int total = include_constant ? 0 : 1; total <= degree; ++total) {
    append_degree(n_vars, total, prefix, monomials_);
  }
  flat_.reserve(monomials_.size() * n_vars);
  for (const auto& m : monomials_) flat_.insert(flat_.end(), m.begin(), m.end());
}

int PolyBasis::index_of(std::span<const int> exponents) const {
  for (int i = 0; i < size(); ++i) {
    if (std::equal(exponents.begin(), exponents.end(), monomials_[i].begin(),
                   monomials_[i].end())) {
      return i;
    }
  }
  return -1;
}

void PolyBasis::to_frame(std::span<const double> x, std::span<double> u) const {
  for (int v = 0; v < n_vars_; ++v) {
    u[v] = frame_.center.empty() ? x[v] : (x[v] - frame_.center[v]) / frame_.scale[v];
  }
}

void PolyBasis::fill_powers(std::span<const double> x, std::span<double> pw) const {
  const int stride = degree_ + 1;
  for (int v = 0; v < n_vars_; ++v) {
    const double u = frame_.center.empty() ? x[v] : (x[v] - frame_.center[v]) / frame_.scale[v];
    double* row = pw.data() + v * stride;
    row[0] = 1.0;
    for (int e = 1; e <= degree_; ++e) row[e] = row[e - 1] * u;
  }
}

double PolyBasis::eval(std::span<const double> a, std::span<const double> x,
                       std::span<double> scratch) const {
  if (monomials_.empty()) return 0.0;
  fill_powers(x, scratch);
  const int stride = degree_ + 1;
  double sum = 0.0;
  const int* e = flat_.data();
  for (std::size_t m = 0; m < monomials_.size(); ++m, e += n_vars_) {
    double term = a[m];
    for (int v = 0; v < n_vars_; ++v) term *= scratch[v * stride + e[v]];
    sum += term;
  }
  return sum;
}

double PolyBasis::orbital(std::span<const double> a, std::span<const double> x,
                          std::span<const double> fx, std::span<double> scratch) const {
  if (monomials_.empty()) return 0.0;
  fill_powers(x, scratch);
  const int stride = degree_ + 1;
  double sum = 0.0;
  const int* e = flat_.data();
  for (std::size_t m = 0; m < monomials_.size(); ++m, e += n_vars_) {
    double deriv = 0.0;
    for (int v = 0; v < n_vars_; ++v) {
      if (e[v] == 0) continue;
      double term = e[v] * fx[v] * inv_scale(v);
      for (int w = 0; w < n_vars_; ++w) {
        term *= scratch[w * stride + (w == v ? e[w] - 1 : e[w])];
      }
      deriv += term;
    }
    sum += a[m] * deriv;
  }
  return sum;
}

PolyCoeffs::PolyCoeffs(PolyBasis b, Vector coeffs) : basis(std::move(b)), a(std::move(coeffs)) {
  if (a.size() != basis.size()) {
    std::ostringstream os;
    os << "coefficient vector has length " << a.size() << ", basis has " << basis.size()
       << " monomials";
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
  if (!a.allFinite()) fail(ErrorCode::kInvalidInput, "non-finite polynomial coefficient");
}

double eval_poly(const PolyCoeffs& c, std::span<const double> x) {
  check_dim(c.basis, x.size(), "point");
  std::vector<double> scratch(c.basis.scratch_size());
  return c.basis.eval({c.a.data(), static_cast<std::size_t>(c.a.size())}, x, scratch);
}

Vector monomial_vector(const PolyBasis& basis, std::span<const double> x_in) {
  check_dim(basis, x_in.size(), "point");
  std::vector<double> x(x_in.size());
  basis.to_frame(x_in, x);
  Vector out(basis.size());
  for (int m = 0; m < basis.size(); ++m) {
    double term = 1.0;
    for (int v = 0; v < basis.n_vars(); ++v) {
      for (int k = 0; k < basis.monomials()[m][v]; ++k) term *= x[v];
    }
    out(m) = term;
  }
  return out;
}

Vector grad_poly_x(const PolyCoeffs& c, std::span<const double> x_in) {
  const int n = c.basis.n_vars();
  check_dim(c.basis, x_in.size(), "point");
  std::vector<double> x(x_in.size());
  c.basis.to_frame(x_in, x);
  Vector grad = Vector::Zero(n);
  for (int m = 0; m < c.basis.size(); ++m) {
    const auto& e = c.basis.monomials()[m];
    for (int v = 0; v < n; ++v) {
      if (e[v] == 0) continue;
      double term = c.a(m) * e[v] * c.basis.inv_scale(v) * std::pow(x[v], e[v] - 1);
      for (int w = 0; w < n; ++w) {
        if (w != v) term *= std::pow(x[w], e[w]);
      }
      grad(v) += term;
    }
  }
  return grad;
}

Vector orbital_derivative_vector(const PolyBasis& basis, std::span<const double> x_in,
                                 std::span<const double> fx) {
  check_dim(basis, x_in.size(), "point");
  std::vector<double> x(x_in.size());
  basis.to_frame(x_in, x);
  check_dim(basis, fx.size(), "vector field value");
  const int n = basis.n_vars();
  Vector out = Vector::Zero(basis.size());
  for (int m = 0; m < basis.size(); ++m) {
    const auto& e = basis.monomials()[m];
    for (int v = 0; v < n; ++v) {
      if (e[v] == 0) continue;
      double term = e[v] * fx[v] * basis.inv_scale(v);
      for (int w = 0; w < n; ++w) {
        const int power = w == v ? e[w] - 1 : e[w];
        for (int k = 0; k < power; ++k) term *= x[w];
      }
      out(m) += term;
    }
  }
  return out;
}

}  // namespace resent
