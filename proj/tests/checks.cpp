#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "resent/optimizer.hpp"
#include "resent/poly.hpp"
#include "resent/subgradient.hpp"

namespace resent::checks {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double gaussian(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

int random_dim(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Vector gaussian_vector(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = gaussian(rng);
  return v;
}

Vector log2_singular_values(const Matrix& m) {
  return Eigen::JacobiSVD<Matrix>(m).singularValues().array().log() / std::numbers::ln2;
}

// Log-moduli of the eigenvalues in base 2, descending.
Vector log2_eigen_moduli(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  const int n = static_cast<int>(m.rows());
  Vector out(n);
  for (int i = 0; i < n; ++i) out(i) = std::log2(std::abs(solver.eigenvalues()(i)));
  std::sort(out.data(), out.data() + n, std::greater<>());
  return out;
}

// Largest violation of x <= y in the majorization sense, together with the
// mismatch of the full sums.
double majorization_error(const Vector& x, const Vector& y) {
  double err = 0.0, sx = 0.0, sy = 0.0;
  for (int k = 0; k < x.size(); ++k) {
    sx += x(k);
    sy += y(k);
    if (k + 1 < x.size()) err = std::max(err, sx - sy);
  }
  return std::max(err, std::abs(sx - sy));
}

// Coordinate scale of the domain, for scaling random polynomial coefficients.
double domain_scale(const Domain& d, Rng& rng) {
  double scale = 1.0;
  for (int i = 0; i < 200; ++i) scale = std::max(scale, random_domain_point(d, rng).cwiseAbs().maxCoeff());
  return scale;
}

ConformalMetric product_geodesic(const ConformalMetric& m, const Vector& v1, const SymMatrix& v2,
                                 double theta) {
  return {PolyCoeffs(m.coeffs.basis, m.coeffs.a + theta * v1),
          geodesic_from_velocity(m.p, v2, theta)};
}

struct Direction {
  Vector v1;
  SymMatrix v2;
};

Direction random_unit_direction(const ConformalMetric& m, Rng& rng) {
  Direction d{gaussian_vector(m.coeffs.basis.size(), rng), random_sym(m.dim(), rng)};
  const double norm = tangent_norm(m.p, d.v1, d.v2);
  d.v1 /= norm;
  d.v2 = d.v2 * (1.0 / norm);
  return d;
}

double pairing(const ConformalMetric& m, const TangentVector& s, const Direction& d) {
  return s.s1.dot(d.v1) + trace_inner(m.p, s.s2, d.v2);
}

TangentVector subgradient_on_set(const SystemCase& c, const ConformalMetric& m,
                                 const std::vector<Vector>& pts, const SetMax& mx,
                                 bool* gap_ok = nullptr) {
  const SigmaEvaluator eval(c, m);
  const Vector& x = pts[mx.arg];
  const PointSigma ps = eval.at({x.data(), static_cast<std::size_t>(x.size())});
  InnerMaxResult inner;
  inner.x_star = x;
  inner.k_star = ps.k_star;
  inner.value = ps.value;
  inner.spectrum = ps.spectrum;
  if (gap_ok != nullptr) {
    *gap_ok = spectral_gap_ok({ps.spectrum.data(), static_cast<std::size_t>(ps.spectrum.size())},
                              ps.k_star, c.discrete());
  }
  return full_subgradient(c, m, inner);
}

// Everything the pointwise functional at x depends on besides the metric:
// the Jacobian and the coefficient-space vector of the exponent.
Vector piece_key(const SystemCase& c, const PolyBasis& basis, const Vector& x) {
  const int n = c.dim();
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
  const FieldFn& step = c.discrete() ? std::get<DiscreteSystem>(c.system).map
                                     : std::get<ContinuousSystem>(c.system).field;
  const JacobianFn& jac = c.discrete() ? std::get<DiscreteSystem>(c.system).jacobian
                                       : std::get<ContinuousSystem>(c.system).jacobian;
  const Matrix a = eval_jacobian(jac, n, xs);
  Vector extra = Vector::Zero(basis.size());
  if (basis.size() > 0) {
    const Vector fx = eval_field(step, n, xs);
    const std::span<const double> fs(fx.data(), static_cast<std::size_t>(n));
    extra = c.discrete() ? Vector(monomial_vector(basis, fs) - monomial_vector(basis, xs))
                         : orbital_derivative_vector(basis, xs, fs);
  }
  Vector key(n * n + extra.size());
  key << Eigen::Map<const Vector>(a.data(), n * n), extra;
  return key;
}

bool same_piece(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, a.cwiseAbs().maxCoeff());
}

SymMatrix standard_basis(int n, int k, int l) {
  Matrix e = Matrix::Zero(n, n);
  e(k, l) = 1.0;
  e(l, k) = 1.0;
  return SymMatrix(e);
}

}  // namespace

Matrix random_orthogonal(int n, Rng& rng) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = gaussian(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    if (r(i, i) < 0) q.col(i) *= -1.0;
  }
  return q;
}

SpdMatrix random_spd(int n, Rng& rng, double log10_cond) {
  const Matrix q = random_orthogonal(n, rng);
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = std::pow(10.0, uniform(rng, -0.5 * log10_cond, 0.5 * log10_cond));
  return SpdMatrix(Matrix(q * d.asDiagonal() * q.transpose()));
}

Matrix random_gl(int n, Rng& rng, double s_min, double s_max) {
  Vector s(n);
  for (int i = 0; i < n; ++i) s(i) = std::exp(uniform(rng, std::log(s_min), std::log(s_max)));
  return random_orthogonal(n, rng) * s.asDiagonal() * random_orthogonal(n, rng).transpose();
}

SymMatrix random_sym(int n, Rng& rng) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = gaussian(rng);
  }
  return SymMatrix(g);
}

Vector random_domain_point(const Domain& domain, Rng& rng) {
  const int n = domain.dim();
  Vector u(n), x(n);
  for (;;) {
    for (int i = 0; i < n; ++i) {
      const ParamAxis& ax = domain.param_axes()[static_cast<std::size_t>(i)];
      u(i) = uniform(rng, ax.lower, ax.upper);
    }
    domain.chart({u.data(), static_cast<std::size_t>(n)}, {x.data(), static_cast<std::size_t>(n)});
    if (domain.contains({x.data(), static_cast<std::size_t>(n)})) return x;
  }
}

ConformalMetric random_metric(const SystemCase& c, Rng& rng, double log10_cond) {
  const PolyBasis basis(c.dim(), c.defaults.degree);
  const double scale = domain_scale(c.domain, rng);
  Vector a(basis.size());
  for (int i = 0; i < basis.size(); ++i) {
    int deg = 0;
    for (int e : basis.monomials()[static_cast<std::size_t>(i)]) deg += e;
    a(i) = 0.3 * gaussian(rng) / std::pow(scale, deg);
  }
  return {PolyCoeffs(basis, a), random_spd(c.dim(), rng, log10_cond)};
}

double rel_error(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

CheckResult geodesic_endpoints(Rng& rng, int count) {
  CheckResult r{"geodesic endpoints"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 6.0), q = random_spd(n, rng, 6.0);
    r.record(std::max(rel_error(geodesic_point(p, q, 0.0).matrix(), p.matrix()),
                      rel_error(geodesic_point(p, q, 1.0).matrix(), q.matrix())),
             1e-10);
  }
  return r;
}

CheckResult geodesic_scalar_rule(Rng& rng, int count) {
  CheckResult r{"geodesic scalar rule"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 6.0), q = random_spd(n, rng, 6.0);
    const double a = std::pow(10.0, uniform(rng, -3, 3)), b = std::pow(10.0, uniform(rng, -3, 3));
    const double theta = uniform(rng, 0, 1);
    const Matrix lhs =
        geodesic_point(SpdMatrix(Matrix(a * p.matrix())), SpdMatrix(Matrix(b * q.matrix())), theta)
            .matrix();
    const Matrix rhs =
        std::pow(a, 1 - theta) * std::pow(b, theta) * geodesic_point(p, q, theta).matrix();
    r.record(rel_error(lhs, rhs), 1e-10);
  }
  return r;
}

CheckResult geodesic_congruence(Rng& rng, int count) {
  CheckResult r{"geodesic congruence invariance"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 3.0), q = random_spd(n, rng, 3.0);
    const Matrix g = random_gl(n, rng, 0.1, 10.0);
    const double theta = uniform(rng, 0, 1);
    const Matrix lhs = g * geodesic_point(p, q, theta).matrix() * g.transpose();
    const Matrix rhs = geodesic_point(SpdMatrix(Matrix(g * p.matrix() * g.transpose())),
                                      SpdMatrix(Matrix(g * q.matrix() * g.transpose())), theta)
                           .matrix();
    r.record(rel_error(lhs, rhs), 1e-9);
  }
  return r;
}

CheckResult geodesic_inversion(Rng& rng, int count) {
  CheckResult r{"geodesic inversion"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 3.0), q = random_spd(n, rng, 3.0);
    const double theta = uniform(rng, 0, 1);
    const Matrix lhs = geodesic_point(p, q, theta).inverse();
    const Matrix rhs =
        geodesic_point(SpdMatrix(p.inverse()), SpdMatrix(q.inverse()), theta).matrix();
    r.record(rel_error(lhs, rhs), 1e-9);
  }
  return r;
}

CheckResult geodesic_velocity_consistency(Rng& rng, int count) {
  CheckResult r{"geodesic velocity consistency"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 3.0);
    // Velocity of unit size in the metric at p.
    SymMatrix v = random_sym(n, rng);
    v = v * (1.0 / std::sqrt(trace_inner(p, v, v)));
    const SpdMatrix end = geodesic_from_velocity(p, v, 1.0);
    const double theta = uniform(rng, 0, 1);
    const double e1 = rel_error(geodesic_point(p, end, 1.0).matrix(), end.matrix());
    const double e2 =
        rel_error(geodesic_from_velocity(p, v, theta).matrix(), geodesic_point(p, end, theta).matrix());
    r.record(std::max(e1, e2), 1e-9);
  }
  return r;
}

CheckResult horn_majorization(Rng& rng, int count) {
  CheckResult r{"Horn majorization"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 2, 5);
    const Matrix g = random_gl(n, rng, 0.01, 100.0), h = random_gl(n, rng, 0.01, 100.0);
    r.record(majorization_error(log_singular_vector(g * h),
                                log_singular_vector(g) + log_singular_vector(h)),
             1e-9);
  }
  return r;
}

CheckResult weyl_majorization(Rng& rng, int count) {
  CheckResult r{"Weyl majorization"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 2, 5);
    const Matrix g = random_gl(n, rng, 0.01, 100.0);
    r.record(majorization_error(log2_eigen_moduli(g), log_singular_vector(g)), 1e-9);
  }
  return r;
}

CheckResult lyapunov_residual(Rng& rng, int count) {
  CheckResult r{"Lyapunov residual"};
  for (int i = 0; i < count; ++i) {
    const int n = random_dim(rng, 1, 5);
    const SpdMatrix p = random_spd(n, rng, 6.0);
    const SymMatrix h = random_sym(n, rng);
    const Matrix x = lyapunov_sqrt_solve(p, h).matrix();
    const Matrix root = p.sqrt();
    r.record(rel_error(root * x + x * root, h.matrix()), 1e-12);
  }
  return r;
}

CheckResult convexity(const SystemCase& c, Rng& rng, int pairs, int points) {
  CheckResult r{"geodesic convexity (" + c.name + ")"};
  r.worst = -1e300;
  for (int i = 0; i < pairs; ++i) {
    const ConformalMetric m0 = random_metric(c, rng), m1 = random_metric(c, rng);
    const SigmaEvaluator e0(c, m0), e1(c, m1);
    std::vector<ConformalMetric> mids;
    for (int t = 1; t <= 9; ++t) {
      const double theta = t / 10.0;
      mids.push_back({PolyCoeffs(m0.coeffs.basis, (1 - theta) * m0.coeffs.a + theta * m1.coeffs.a),
                      geodesic_point(m0.p, m1.p, theta)});
    }
    for (int j = 0; j < points; ++j) {
      const Vector x = random_domain_point(c.domain, rng);
      const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
      const double v0 = e0.at(xs).value, v1 = e1.at(xs).value;
      for (int t = 1; t <= 9; ++t) {
        const double theta = t / 10.0;
        const double mid = SigmaEvaluator(c, mids[static_cast<std::size_t>(t - 1)]).at(xs).value;
        // Error is the excess over the chord; nonpositive when convex.
        r.record(mid - ((1 - theta) * v0 + theta * v1), 1e-9);
      }
    }
  }
  return r;
}

std::vector<Vector> fixed_point_set(const SystemCase& c, const std::vector<int>& counts) {
  std::vector<Vector> out;
  for (auto& gp : grid_points(c.domain, counts)) out.push_back(gp.x);
  return out;
}

SetMax max_over(const SystemCase& c, const ConformalMetric& m, const std::vector<Vector>& pts) {
  const SigmaEvaluator eval(c, m);
  auto ws = eval.workspace();
  Vector spectrum(c.dim());
  SetMax out{-1e300, -1e300, 0};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int k = 0;
    const double v = eval.evaluate({pts[i].data(), static_cast<std::size_t>(pts[i].size())}, ws,
                                   {spectrum.data(), static_cast<std::size_t>(spectrum.size())}, k);
    if (v > out.best) {
      out.second = out.best;
      out.best = v;
      out.arg = i;
    } else if (v > out.second) {
      out.second = v;
    }
  }
  return out;
}

CheckResult subgradient_inequality(const SystemCase& c, Rng& rng, int instances,
                                   const std::vector<Vector>& pts) {
  CheckResult r{"subgradient inequality (" + c.name + ")"};
  r.worst = -1e300;
  for (int i = 0; i < instances; ++i) {
    const ConformalMetric m = random_metric(c, rng);
    const SetMax mx = max_over(c, m, pts);
    const TangentVector s = subgradient_on_set(c, m, pts, mx);
    for (int j = 0; j < 20; ++j) {
      const Direction d = random_unit_direction(m, rng);
      const double slope = pairing(m, s, d);
      for (double theta : {1e-3, 1e-2, 1e-1}) {
        const double moved = max_over(c, product_geodesic(m, d.v1, d.v2, theta), pts).best;
        r.record(mx.best + theta * slope - moved, 1e-7);
      }
    }
  }
  return r;
}

CheckResult directional_derivative(const SystemCase& c, Rng& rng, int instances,
                                   const std::vector<Vector>& pts) {
  CheckResult r{"directional derivative (" + c.name + ")"};
  constexpr double kTheta = 1e-5;
  int smooth = 0, draws = 0, crossed = 0;
  while (smooth < instances && draws < 20 * instances) {
    ++draws;
    const ConformalMetric m = random_metric(c, rng);
    const SetMax mx = max_over(c, m, pts);
    // Unique up to points carrying the same piece of the objective.
    const Vector key = piece_key(c, m.coeffs.basis, pts[mx.arg]);
    const SigmaEvaluator eval(c, m);
    bool unique = true;
    for (std::size_t i = 0; i < pts.size() && unique; ++i) {
      if (i == mx.arg) continue;
      const double v = eval.at({pts[i].data(), static_cast<std::size_t>(pts[i].size())}).value;
      if (v > mx.best - 1e-6) unique = same_piece(key, piece_key(c, m.coeffs.basis, pts[i]));
    }
    if (!unique) continue;
    bool gap_ok = true;
    const TangentVector s = subgradient_on_set(c, m, pts, mx, &gap_ok);
    if (!gap_ok) continue;
    ++smooth;
    const int k_star = eval.at({pts[mx.arg].data(), static_cast<std::size_t>(pts[mx.arg].size())}).k_star;
    for (int j = 0; j < 10; ++j) {
      const Direction d = random_unit_direction(m, rng);
      const ConformalMetric moved_metric = product_geodesic(m, d.v1, d.v2, kTheta);
      const SetMax moved = max_over(c, moved_metric, pts);
      const Vector& xm = pts[moved.arg];
      const int moved_k = SigmaEvaluator(c, moved_metric).at({xm.data(), static_cast<std::size_t>(xm.size())}).k_star;
      // The step left the piece: the difference quotient spans a kink.
      if (moved_k != k_star || !same_piece(key, piece_key(c, m.coeffs.basis, xm))) {
        ++crossed;
        continue;
      }
      r.record(std::abs((moved.best - mx.best) / kTheta - pairing(m, s, d)), 1e-3);
    }
  }
  r.note = std::to_string(smooth) + " smooth instances of " + std::to_string(draws) +
           " drawn, " + std::to_string(crossed) + " directions crossed a kink within the step";
  if (smooth < instances || r.instances < instances) ++r.violations;
  return r;
}

CheckResult riesz_identity(const SystemCase& c, Rng& rng, int instances) {
  CheckResult r{"Riesz identity (" + c.name + ")"};
  const int n = c.dim();
  const JacobianFn& jac = std::visit([](const auto& s) -> const JacobianFn& { return s.jacobian; },
                                     c.system);
  for (int i = 0; i < instances; ++i) {
    const SpdMatrix p = random_spd(n, rng, 2.0);
    const Vector x = random_domain_point(c.domain, rng);
    const Matrix a = eval_jacobian(jac, n, {x.data(), static_cast<std::size_t>(n)});
    const int k = random_dim(rng, 1, n);
    Matrix s;
    SymMatrix s2;
    if (c.discrete()) {
      s = singular_sum_gradient(zeta(p, a), k);
      s2 = discrete_matrix_subgrad(p, a, k).value;
    } else {
      s = eigen_sum_gradient(zeta_hat(p, a), k);
      s2 = continuous_matrix_subgrad(p, a, k).value;
    }
    for (int kk = 0; kk < n; ++kk) {
      for (int ll = kk; ll < n; ++ll) {
        const SymMatrix v = standard_basis(n, kk, ll);
        const Matrix dz = c.discrete() ? zeta_derivative(p, a, v) : zeta_hat_derivative(p, a, v);
        const double lhs = (s.transpose() * dz).trace();
        const double rhs = trace_inner(p, s2, v);
        const double scale = std::max(s.norm() * dz.norm(), 1e-300);
        r.record(std::abs(lhs - rhs) / scale, 1e-10);
      }
    }
  }
  return r;
}

CheckResult zeta_derivative_fd(const SystemCase& c, Rng& rng, int instances) {
  CheckResult r{"zeta derivative vs differences (" + c.name + ")"};
  const int n = c.dim();
  const JacobianFn& jac = std::visit([](const auto& s) -> const JacobianFn& { return s.jacobian; },
                                     c.system);
  constexpr double kTheta = 1e-5;
  for (int i = 0; i < instances; ++i) {
    const SpdMatrix p = random_spd(n, rng, 2.0);
    const Vector x = random_domain_point(c.domain, rng);
    const Matrix a = eval_jacobian(jac, n, {x.data(), static_cast<std::size_t>(n)});
    // Direction of unit size relative to p.
    const SymMatrix w = random_sym(n, rng);
    const double wn = Eigen::SelfAdjointEigenSolver<Matrix>(w.matrix()).eigenvalues().cwiseAbs().maxCoeff();
    const SymMatrix v(Matrix(p.sqrt() * (w.matrix() / wn) * p.sqrt()));
    const SpdMatrix plus(Matrix(p.matrix() + kTheta * v.matrix()));
    const SpdMatrix minus(Matrix(p.matrix() - kTheta * v.matrix()));
    const Matrix fd = (zeta(plus, a) - zeta(minus, a)) / (2 * kTheta);
    const Matrix fd_hat =
        (zeta_hat(plus, a).matrix() - zeta_hat(minus, a).matrix()) / (2 * kTheta);
    r.record(std::max(rel_error(zeta_derivative(p, a, v), fd),
                      rel_error(zeta_hat_derivative(p, a, v), fd_hat)),
             1e-6);
  }
  return r;
}

CheckResult continuous_discrete_limit(const SystemCase& lorenz, Rng& rng, int points, double t,
                                      double tolerance) {
  CheckResult r{"continuous/discrete limit (" + lorenz.name + ")"};
  const auto& sys = std::get<ContinuousSystem>(lorenz.system);
  const int n = sys.dim;
  constexpr int kSteps = 10;

  // State: x (n) followed by the fundamental matrix (n * n, column-major).
  auto rhs = [&](const Vector& state) {
    Vector out(n + n * n);
    const std::span<const double> x(state.data(), static_cast<std::size_t>(n));
    out.head(n) = eval_field(sys.field, n, x);
    const Matrix a = eval_jacobian(sys.jacobian, n, x);
    const Eigen::Map<const Matrix> phi(state.data() + n, n, n);
    Eigen::Map<Matrix>(out.data() + n, n, n) = a * phi;
    return out;
  };

  for (int i = 0; i < points; ++i) {
    const ConformalMetric m = random_metric(lorenz, rng, 1.0);
    const Vector x0 = random_domain_point(lorenz.domain, rng);
    const std::span<const double> xs(x0.data(), static_cast<std::size_t>(n));
    const PointSigma zeta_spec = continuous_sigma_at(lorenz, m, xs);

    Vector state(n + n * n);
    state.head(n) = x0;
    Eigen::Map<Matrix>(state.data() + n, n, n).setIdentity();
    const double h = t / kSteps;
    for (int s = 0; s < kSteps; ++s) {
      const Vector k1 = rhs(state);
      const Vector k2 = rhs(state + 0.5 * h * k1);
      const Vector k3 = rhs(state + 0.5 * h * k2);
      const Vector k4 = rhs(state + h * k3);
      state += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    const Vector xt = state.head(n);
    const Matrix phi = Eigen::Map<const Matrix>(state.data() + n, n, n);
    const double dr = eval_poly(m.coeffs, {xt.data(), static_cast<std::size_t>(n)}) -
                      eval_poly(m.coeffs, xs);
    const Matrix mt = std::exp(0.5 * dr) * m.p.sqrt() * phi * m.p.inv_sqrt();
    const Vector ls = log2_singular_values(mt);

    double lhs = 0.0, sum = 0.0;
    for (int k = 0; k < n; ++k) {
      lhs += zeta_spec.spectrum(k);
      sum += ls(k);
      r.record(std::abs(lhs - 2.0 * std::numbers::ln2 / t * sum), tolerance);
    }
  }
  return r;
}

}  // namespace resent::checks
