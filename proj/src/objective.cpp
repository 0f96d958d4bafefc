#include "resent/objective.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "resent/error.hpp"

namespace resent {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

[[noreturn]] void singular_at(std::span<const double> x) {
  fail(ErrorCode::kSingularMatrix,
       "Jacobian is numerically singular at x = " + format_point(x) +
           "; the map must be invertible on the domain");
}

double positive_part(std::span<double> spectrum, int& k_star) {
  double sum = 0.0;
  k_star = 0;
  for (double s : spectrum) {
    if (s > 0.0) {
      sum += s;
      ++k_star;
    }
  }
  return sum;
}

// Layout of SigmaEvaluator::Workspace::buffer.
struct Slots {
  int n;
  int fx() const { return 0; }
  int jac() const { return n; }
  int poly() const { return n + n * n; }
};

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

ConformalMetric::ConformalMetric(PolyCoeffs c, SpdMatrix m) : coeffs(std::move(c)), p(std::move(m)) {
  if (coeffs.basis.n_vars() != p.dim()) {
    std::ostringstream os;
    os << "polynomial in " << coeffs.basis.n_vars() << " variables paired with a " << p.dim()
       << "x" << p.dim() << " matrix";
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
}

ConformalMetric ConformalMetric::identity(const PolyBasis& basis) {
  return {PolyCoeffs::zero(basis), SpdMatrix::identity(basis.n_vars())};
}

SigmaEvaluator::SigmaEvaluator(const SystemCase& c, const ConformalMetric& m)
    : case_(&c), metric_(&m), n_(c.dim()), discrete_(c.discrete()) {
  if (m.dim() != n_) {
    std::ostringstream os;
    os << "metric dimension " << m.dim() << " does not match system dimension " << n_;
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
  root_ = m.p.sqrt();
  inv_root_ = m.p.inv_sqrt();
}

SigmaEvaluator::Workspace SigmaEvaluator::workspace() const {
  const Slots s{n_};
  return {std::vector<double>(s.poly() + metric_->coeffs.basis.scratch_size() + 1, 0.0)};
}

void SigmaEvaluator::discrete_point(std::span<const double> x, Workspace& ws,
                                    std::span<double> spectrum) const {
  const Slots s{n_};
  double* buf = ws.buffer.data();
  const auto& sys = std::get<DiscreteSystem>(case_->system);
  const auto nn = static_cast<std::size_t>(n_);
  std::span<double> fx(buf + s.fx(), nn);
  std::span<double> jac(buf + s.jac(), nn * nn);
  sys.map(x, fx);
  sys.jacobian(x, jac);

  const auto& basis = metric_->coeffs.basis;
  const std::span<const double> a(metric_->coeffs.a.data(),
                                  static_cast<std::size_t>(metric_->coeffs.a.size()));
  std::span<double> scratch(buf + s.poly(), static_cast<std::size_t>(basis.scratch_size()));
  const double dr = basis.size() == 0 ? 0.0 : basis.eval(a, fx, scratch) - basis.eval(a, x, scratch);
  const double shift = 0.5 * dr * kInvLn2;

  if (n_ == 2) {
    const double a00 = jac[0], a01 = jac[1], a10 = jac[2], a11 = jac[3];
    const double r00 = root_(0, 0), r01 = root_(0, 1), r11 = root_(1, 1);
    const double i00 = inv_root_(0, 0), i01 = inv_root_(0, 1), i11 = inv_root_(1, 1);
    // t = root * A
    const double t00 = r00 * a00 + r01 * a10, t01 = r00 * a01 + r01 * a11;
    const double t10 = r01 * a00 + r11 * a10, t11 = r01 * a01 + r11 * a11;
    // m = t * inv_root
    const double m00 = t00 * i00 + t01 * i01, m01 = t00 * i01 + t01 * i11;
    const double m10 = t10 * i00 + t11 * i01, m11 = t10 * i01 + t11 * i11;
    const double s_plus = std::hypot(m00 + m11, m01 - m10);
    const double s_minus = std::hypot(m00 - m11, m01 + m10);
    const double alpha1 = 0.5 * (s_plus + s_minus);
    const double det = std::abs(m00 * m11 - m01 * m10);
    const double alpha2 = det / alpha1;
    if (!(alpha2 > 1e-14 * alpha1)) singular_at(x);
    spectrum[0] = std::log2(alpha1) + shift;
    spectrum[1] = std::log2(alpha2) + shift;
    return;
  }

  Eigen::Map<const RowMat> jm(jac.data(), n_, n_);
  const Matrix m = root_ * Matrix(jm) * inv_root_;
  Eigen::JacobiSVD<Matrix> solver(m);
  const Vector& sv = solver.singularValues();
  if (!(sv(n_ - 1) > 1e-14 * sv(0))) singular_at(x);
  for (int i = 0; i < n_; ++i) spectrum[i] = std::log2(sv(i)) + shift;
}

void SigmaEvaluator::continuous_point(std::span<const double> x, Workspace& ws,
                                      std::span<double> spectrum) const {
  const Slots s{n_};
  double* buf = ws.buffer.data();
  const auto& sys = std::get<ContinuousSystem>(case_->system);
  const auto nn = static_cast<std::size_t>(n_);
  std::span<double> fx(buf + s.fx(), nn);
  std::span<double> jac(buf + s.jac(), nn * nn);
  sys.field(x, fx);
  sys.jacobian(x, jac);

  const auto& basis = metric_->coeffs.basis;
  const std::span<const double> a(metric_->coeffs.a.data(),
                                  static_cast<std::size_t>(metric_->coeffs.a.size()));
  std::span<double> scratch(buf + s.poly(), static_cast<std::size_t>(basis.scratch_size()));
  const double rdot = basis.size() == 0 ? 0.0 : basis.orbital(a, x, fx, scratch);

  if (n_ == 3) {
    Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> jm(jac.data());
    const Eigen::Matrix3d root = root_;
    const Eigen::Matrix3d inv_root = inv_root_;
    const Eigen::Matrix3d m = root * jm * inv_root;
    Eigen::Matrix3d h = m + m.transpose();
    h.diagonal().array() += rdot;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
    solver.computeDirect(h, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d& ev = solver.eigenvalues();
    spectrum[0] = ev(2);
    spectrum[1] = ev(1);
    spectrum[2] = ev(0);
    return;
  }
  if (n_ == 2) {
    const Eigen::Matrix2d root = root_;
    const Eigen::Matrix2d inv_root = inv_root_;
    Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>> jm(jac.data());
    const Eigen::Matrix2d m = root * jm * inv_root;
    const double h00 = 2.0 * m(0, 0) + rdot, h11 = 2.0 * m(1, 1) + rdot;
    const double h01 = m(0, 1) + m(1, 0);
    const double mean = 0.5 * (h00 + h11);
    const double radius = std::hypot(0.5 * (h00 - h11), h01);
    spectrum[0] = mean + radius;
    spectrum[1] = mean - radius;
    return;
  }

  Eigen::Map<const RowMat> jm(jac.data(), n_, n_);
  const Matrix m = root_ * Matrix(jm) * inv_root_;
  Matrix h = m + m.transpose();
  h.diagonal().array() += rdot;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
  for (int i = 0; i < n_; ++i) spectrum[i] = solver.eigenvalues()(n_ - 1 - i);
}

double SigmaEvaluator::evaluate(std::span<const double> x, Workspace& ws,
                                std::span<double> spectrum, int& k_star) const {
  if (discrete_) {
    discrete_point(x, ws, spectrum);
  } else {
    continuous_point(x, ws, spectrum);
  }
  for (int i = 0; i < n_; ++i) {
    if (!std::isfinite(spectrum[i])) {
      fail(ErrorCode::kNumerical, "non-finite spectrum at x = " + format_point(x));
    }
  }
  return positive_part(spectrum.first(static_cast<std::size_t>(n_)), k_star);
}

PointSigma SigmaEvaluator::at(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) {
    fail(ErrorCode::kDimensionMismatch, "point dimension does not match the system");
  }
  Workspace ws = workspace();
  PointSigma out;
  out.spectrum = Vector(n_);
  out.value = evaluate(x, ws, {out.spectrum.data(), static_cast<std::size_t>(n_)}, out.k_star);
  return out;
}

PointSigma discrete_sigma_at(const SystemCase& c, const ConformalMetric& m,
                             std::span<const double> x) {
  if (!c.discrete()) fail(ErrorCode::kInvalidInput, "discrete functional requested for a flow");
  return SigmaEvaluator(c, m).at(x);
}

PointSigma continuous_sigma_at(const SystemCase& c, const ConformalMetric& m,
                               std::span<const double> x) {
  if (c.discrete()) fail(ErrorCode::kInvalidInput, "continuous functional requested for a map");
  return SigmaEvaluator(c, m).at(x);
}

PointSigma sigma_at(const SystemCase& c, const ConformalMetric& m, std::span<const double> x) {
  return SigmaEvaluator(c, m).at(x);
}

bool spectral_gap_ok(std::span<const double> spectrum, int k, bool discrete) {
  const int n = static_cast<int>(spectrum.size());
  if (k <= 0 || k >= n) return true;
  const double upper = spectrum[k - 1], lower = spectrum[k];
  if (discrete) {
    // log2(alpha_k / alpha_{k+1}) against log2(1 + tol).
    return upper - lower >= std::log2(1.0 + kGapTolerance);
  }
  double scale = 0.0;
  for (double s : spectrum) scale = std::max(scale, std::abs(s));
  return upper - lower >= kGapTolerance * scale;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

struct Best {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = 0;
  bool found = false;
};

bool better(const Best& a, const Best& b) {
  if (!a.found) return false;
  if (!b.found) return true;
  return a.value > b.value || (a.value == b.value && a.index < b.index);
}

Best scan(const Grid& grid, const SigmaEvaluator& eval, int workers) {
  const std::size_t total = grid.size();
  const int n = grid.dim();
  workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers),
                                                   std::max<std::size_t>(total, 1)));

  struct Outcome {
    Best best;
    std::exception_ptr error;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(workers));

  auto work = [&](int w) {
    const std::size_t begin = total * w / workers;
    const std::size_t end = total * (w + 1) / workers;
    auto ws = eval.workspace();
    std::vector<double> param(n), x(n), spectrum(n);
    Best best;
    try {
      for (std::size_t i = begin; i < end; ++i) {
        if (!grid.point(i, param, x)) continue;
        int k = 0;
        const double v = eval.evaluate(x, ws, spectrum, k);
        if (!best.found || v > best.value) best = {v, i, true};
      }
    } catch (...) {
      outcomes[w].error = std::current_exception();
    }
    outcomes[w].best = best;
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }

  // Chunks are contiguous and ordered, so the first failing chunk holds the
  // smallest failing index.
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
  }
  Best best;
  for (const auto& o : outcomes) {
    if (better(o.best, best)) best = o.best;
  }
  return best;
}

}  // namespace

InnerMaxResult maximize(const SystemCase& c, const ConformalMetric& m, const GridConfig& config) {
  const SigmaEvaluator eval(c, m);
  const int n = c.dim();
  const int workers = resolve_workers(config.workers);

  const Grid coarse = Grid::regular(c.domain, config.counts);
  const Best coarse_best = scan(coarse, eval, workers);
  if (!coarse_best.found) fail(ErrorCode::kNumerical, "grid contains no point of the domain");

  Vector param(n), x(n);
  coarse.point(coarse_best.index, {param.data(), static_cast<std::size_t>(n)},
               {x.data(), static_cast<std::size_t>(n)});

  InnerMaxResult out;
  out.index = coarse_best.index;
  out.value = coarse_best.value;
  out.x_star = x;
  out.x_star_param = param;

  if (config.refine) {
    const Grid fine = Grid::refined(c.domain, config.counts,
                                    {param.data(), static_cast<std::size_t>(n)});
    const Best fine_best = scan(fine, eval, workers);
    if (fine_best.found && fine_best.value > coarse_best.value) {
      fine.point(fine_best.index, {param.data(), static_cast<std::size_t>(n)},
                 {x.data(), static_cast<std::size_t>(n)});
      out.index = fine_best.index;
      out.value = fine_best.value;
      out.x_star = x;
      out.x_star_param = param;
      out.from_refinement = true;
    }
  }

  const PointSigma at_star = eval.at({out.x_star.data(), static_cast<std::size_t>(n)});
  out.k_star = at_star.k_star;
  out.spectrum = at_star.spectrum;
  out.gap_ok = spectral_gap_ok({out.spectrum.data(), static_cast<std::size_t>(n)}, out.k_star,
                               c.discrete());
  return out;
}

double entropy_scale(const SystemCase& c) {
  return c.discrete() ? 1.0 : 1.0 / (2.0 * std::numbers::ln2);
}

double entropy_estimate(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid) {
  return maximize(c, m, grid).value * entropy_scale(c);
}

}  // namespace resent
