#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "resent/objective.hpp"

using namespace resent;

namespace {

Matrix jacobian_at(const SystemCase& c, std::span<const double> x) {
  const JacobianFn& j = c.discrete() ? std::get<DiscreteSystem>(c.system).jacobian
                                     : std::get<ContinuousSystem>(c.system).jacobian;
  return eval_jacobian(j, c.dim(), x);
}

double positive_sum(const Vector& v) { return v.cwiseMax(0.0).sum(); }

}  // namespace

TEST_CASE("discrete functional at the identity metric is a sum of log2 singular values") {
  const SystemCase c = henon_case();
  const ConformalMetric m = ConformalMetric::identity(PolyBasis(2, 3));
  const double x[] = {0.7, -0.2};
  const Vector sv = Eigen::JacobiSVD<Matrix>(jacobian_at(c, x)).singularValues();
  const Vector l = sv.array().log() / std::numbers::ln2;
  const PointSigma s = discrete_sigma_at(c, m, x);
  CHECK(s.value == doctest::Approx(positive_sum(l)).epsilon(1e-13));
  CHECK(s.k_star == (l.array() > 0).count());
}

TEST_CASE("a scalar factor cancels and the exponent shifts by half its increment") {
  const SystemCase c = henon_case();
  const PolyBasis b(2, 1);
  Vector a(2);
  a << 0.3, -0.4;
  const ConformalMetric m(PolyCoeffs(b, a), SpdMatrix(Matrix(5.0 * Matrix::Identity(2, 2))));
  const double x[] = {0.2, 0.1};
  const double phi[] = {1.4 - 0.04 + 0.3 * 0.1, 0.2};
  const double dr = a(0) * (phi[0] - x[0]) + a(1) * (phi[1] - x[1]);
  const Vector sv = Eigen::JacobiSVD<Matrix>(jacobian_at(c, x)).singularValues();
  const Vector l = (sv.array().log() + 0.5 * dr) / std::numbers::ln2;
  CHECK(discrete_sigma_at(c, m, x).value == doctest::Approx(positive_sum(l)).epsilon(1e-13));
}

TEST_CASE("continuous functional at the identity metric uses the symmetric part") {
  const SystemCase c = lorenz_case();
  const ConformalMetric m = ConformalMetric::identity(PolyBasis(3, 2));
  const double x[] = {1.0, -3.0, 20.0};
  const Matrix a = jacobian_at(c, x);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(a + a.transpose()).eigenvalues();
  CHECK(continuous_sigma_at(c, m, x).value == doctest::Approx(positive_sum(ev)).epsilon(1e-12));
  CHECK(entropy_scale(c) == doctest::Approx(1.0 / (2.0 * std::numbers::ln2)));
  CHECK(entropy_scale(henon_case()) == 1.0);
}

TEST_CASE("spectral gap test") {
  const double tied[] = {1.0, 1.0, -2.0};
  const double apart[] = {2.0, 1.0, -2.0};
  CHECK_FALSE(spectral_gap_ok(tied, 1, false));
  CHECK(spectral_gap_ok(apart, 1, false));
  CHECK(spectral_gap_ok(tied, 0, false));
  CHECK(spectral_gap_ok(tied, 3, false));
}

TEST_CASE("grid maximization is independent of the worker count") {
  const SystemCase c = henon_case();
  const ConformalMetric m = ConformalMetric::identity(PolyBasis(2, 3));
  const InnerMaxResult one = maximize(c, m, GridConfig{{60, 60}, true, 1});
  const InnerMaxResult four = maximize(c, m, GridConfig{{60, 60}, true, 4});
  CHECK(one.value == four.value);
  CHECK(one.x_star == four.x_star);
  CHECK(entropy_estimate(c, m, GridConfig{{60, 60}, true, 3}) == one.value);
}

TEST_CASE("refinement never lowers the grid maximum") {
  const SystemCase c = lorenz_case();
  const ConformalMetric m = ConformalMetric::identity(PolyBasis(3, 2));
  const double coarse = maximize(c, m, GridConfig{{20, 8, 10}, false, 0}).value;
  const double refined = maximize(c, m, GridConfig{{20, 8, 10}, true, 0}).value;
  CHECK(refined >= coarse);
}
