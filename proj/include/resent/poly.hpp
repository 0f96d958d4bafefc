#pragma once

// Polynomials of bounded total degree in n variables, the exponent r_a(x) of
// a conformal metric e^{r_a(x)} p.

#include <span>
#include <string>
#include <vector>

#include "resent/spd.hpp"

namespace resent {

inline constexpr const char* kOrderingTag = "grlex-v1";

/// Affine change of variables u = (x - center) / scale. Monomials are
/// evaluated in u. Empty vectors mean center 0 and scale 1. The function
/// class is the same for every frame; only the coefficient geometry seen by
/// the optimizer changes.
struct PolyFrame {
  std::vector<double> center;
  std::vector<double> scale;

  bool is_identity() const;
  bool operator==(const PolyFrame&) const = default;
};

/// Ordered monomial basis. Ordering ("grlex-v1"): ascending total degree,
/// ties broken lexicographically descending in the exponents, first variable
/// most significant. For n = 2, d = 2: 1, x1, x2, x1^2, x1 x2, x2^2.
class PolyBasis {
 public:
  PolyBasis() = default;
  PolyBasis(int n_vars, int degree, bool include_constant = false, PolyFrame frame = {});

  int n_vars() const { return n_vars_; }
  int degree() const { return degree_; }
  bool include_constant() const { return include_constant_; }
  const PolyFrame& frame() const { return frame_; }
  /// u = (x - center) / scale, written to `u`.
  void to_frame(std::span<const double> x, std::span<double> u) const;
  /// 1 / scale_v, the factor d u_v / d x_v.
  double inv_scale(int v) const { return inv_scale_.empty() ? 1.0 : inv_scale_[v]; }
  int size() const { return static_cast<int>(monomials_.size()); }
  const std::vector<std::vector<int>>& monomials() const { return monomials_; }

  /// Position of an exponent tuple, or -1 when absent.
  int index_of(std::span<const int> exponents) const;

  bool operator==(const PolyBasis& o) const {
    return n_vars_ == o.n_vars_ && degree_ == o.degree_ &&
           include_constant_ == o.include_constant_ && frame_ == o.frame_;
  }

  /// Allocation-free kernels over caller buffers; `scratch` must hold at
  /// least scratch_size() doubles.
  int scratch_size() const { return n_vars_ * (degree_ + 1); }
  double eval(std::span<const double> a, std::span<const double> x,
              std::span<double> scratch) const;
  double orbital(std::span<const double> a, std::span<const double> x,
                 std::span<const double> fx, std::span<double> scratch) const;

 private:
  void fill_powers(std::span<const double> x, std::span<double> scratch) const;

  int n_vars_ = 0;
  int degree_ = 0;
  bool include_constant_ = false;
  PolyFrame frame_;
  std::vector<double> inv_scale_;
  std::vector<std::vector<int>> monomials_;
  std::vector<int> flat_;  // monomials_ flattened row-major
};

/// Binomial coefficient C(d + n, n), the size of the full basis.
long full_basis_size(int n_vars, int degree);

struct PolyCoeffs {
  PolyBasis basis;
  Vector a;

  PolyCoeffs() = default;
  PolyCoeffs(PolyBasis b, Vector coeffs);
  static PolyCoeffs zero(const PolyBasis& b) { return {b, Vector::Zero(b.size())}; }
};

double eval_poly(const PolyCoeffs& c, std::span<const double> x);
Vector monomial_vector(const PolyBasis& basis, std::span<const double> x);
Vector grad_poly_x(const PolyCoeffs& c, std::span<const double> x);

/// Vector o with <a, o> = grad r_a(x) . fx for every a.
Vector orbital_derivative_vector(const PolyBasis& basis, std::span<const double> x,
                                 std::span<const double> fx);

}  // namespace resent
