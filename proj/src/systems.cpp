#include "resent/systems.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "resent/error.hpp"

namespace resent {

namespace {

constexpr double kMembershipTol = 1e-9;

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& system, const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(ErrorCode::kConfig, "unknown parameter '" + key + "' for system " + system);
    if (!std::isfinite(value)) fail(ErrorCode::kConfig, "parameter '" + key + "' is not finite");
  }
}

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a, double px,
             double py) {
  return (a[0] - o[0]) * (py - o[1]) - (a[1] - o[1]) * (px - o[0]);
}

}  // namespace

int system_dim(const System& s) {
  return std::visit([](const auto& sys) { return sys.dim; }, s);
}

bool is_discrete(const System& s) { return std::holds_alternative<DiscreteSystem>(s); }

JacobianFn numeric_jacobian(int dim, FieldFn f, double h) {
  return [dim, f = std::move(f), h](std::span<const double> x, std::span<double> out) {
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> plus(dim), minus(dim);
    for (int j = 0; j < dim; ++j) {
      const double step = h * std::max(1.0, std::abs(x[j]));
      probe[j] = x[j] + step;
      f(probe, plus);
      probe[j] = x[j] - step;
      f(probe, minus);
      probe[j] = x[j];
      for (int i = 0; i < dim; ++i) out[i * dim + j] = (plus[i] - minus[i]) / (2.0 * step);
    }
  };
}

Vector eval_field(const FieldFn& f, int dim, std::span<const double> x) {
  Vector out(dim);
  f(x, {out.data(), static_cast<std::size_t>(dim)});
  return out;
}

Matrix eval_jacobian(const JacobianFn& j, int dim, std::span<const double> x) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(dim, dim);
  j(x, {out.data(), static_cast<std::size_t>(dim * dim)});
  return out;
}

// ---------------------------------------------------------------------------
// Domains

Domain::Domain(Variant v) : shape_(std::move(v)) {
  std::visit(
      [this](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxDomain>) {
          if (s.lower.size() != s.upper.size() || s.lower.empty()) {
            fail(ErrorCode::kInvalidInput, "box bounds must be non-empty and equally long");
          }
          dim_ = static_cast<int>(s.lower.size());
          for (int i = 0; i < dim_; ++i) {
            if (!(s.lower[i] < s.upper[i])) fail(ErrorCode::kInvalidInput, "empty box axis");
            axes_.push_back({s.lower[i], s.upper[i], false});
          }
        } else if constexpr (std::is_same_v<T, QuadDomain>) {
          dim_ = 2;
          axes_ = {{0.0, 1.0, false}, {0.0, 1.0, false}};
        } else if constexpr (std::is_same_v<T, BallDomain>) {
          if (!(s.radius > 0.0)) fail(ErrorCode::kInvalidInput, "ball radius must be positive");
          dim_ = 3;
          axes_ = {{0.0, s.radius, false},
                   {0.0, std::numbers::pi, false},
                   {0.0, 2.0 * std::numbers::pi, false}};
        } else {
          if (s.lower.size() != s.upper.size() || s.lower.empty()) {
            fail(ErrorCode::kInvalidInput, "cylinder bounds must be non-empty and equally long");
          }
          dim_ = static_cast<int>(s.lower.size());
          if (s.angle_axis < 0 || s.angle_axis >= dim_ || !(s.period > 0.0)) {
            fail(ErrorCode::kInvalidInput, "invalid cylinder angle axis");
          }
          for (int i = 0; i < dim_; ++i) {
            if (i == s.angle_axis) {
              axes_.push_back({0.0, s.period, true});
            } else {
              if (!(s.lower[i] < s.upper[i])) fail(ErrorCode::kInvalidInput, "empty cylinder axis");
              axes_.push_back({s.lower[i], s.upper[i], false});
            }
          }
        }
      },
      shape_);
}

void Domain::chart(std::span<const double> u, std::span<double> x) const {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadDomain>) {
          const double w0 = (1 - u[0]) * (1 - u[1]), w1 = u[0] * (1 - u[1]);
          const double w2 = u[0] * u[1], w3 = (1 - u[0]) * u[1];
          const auto& c = s.corners;
          x[0] = w0 * c[0][0] + w1 * c[1][0] + w2 * c[2][0] + w3 * c[3][0];
          x[1] = w0 * c[0][1] + w1 * c[1][1] + w2 * c[2][1] + w3 * c[3][1];
        } else if constexpr (std::is_same_v<T, BallDomain>) {
          const double r = u[0], az = u[1], pol = u[2];
          x[0] = s.center[0] + r * std::sin(az) * std::cos(pol);
          x[1] = s.center[1] + r * std::sin(az) * std::sin(pol);
          x[2] = s.center[2] + r * std::cos(az);
        } else {
          for (int i = 0; i < dim_; ++i) x[i] = u[i];
        }
      },
      shape_);
}

bool Domain::contains(std::span<const double> x) const {
  return std::visit(
      [&](const auto& s) -> bool {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, BoxDomain>) {
          for (int i = 0; i < dim_; ++i) {
            const double tol = kMembershipTol * (s.upper[i] - s.lower[i]);
            if (x[i] < s.lower[i] - tol || x[i] > s.upper[i] + tol) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, QuadDomain>) {
          const auto& c = s.corners;
          // Signed area fixes the orientation of the corner sequence.
          double area = 0.0;
          for (int i = 0; i < 4; ++i) {
            const auto& p = c[i];
            const auto& q = c[(i + 1) % 4];
            area += p[0] * q[1] - q[0] * p[1];
          }
          const double sign = area > 0 ? 1.0 : -1.0;
          double scale = 0.0;
          for (const auto& p : c) scale = std::max({scale, std::abs(p[0]), std::abs(p[1])});
          const double tol = kMembershipTol * scale * scale;
          for (int i = 0; i < 4; ++i) {
            if (sign * cross(c[i], c[(i + 1) % 4], x[0], x[1]) < -tol) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, BallDomain>) {
          double r2 = 0.0;
          for (int i = 0; i < 3; ++i) r2 += (x[i] - s.center[i]) * (x[i] - s.center[i]);
          return std::sqrt(r2) <= s.radius * (1.0 + kMembershipTol);
        } else {
          for (int i = 0; i < dim_; ++i) {
            if (i == s.angle_axis) continue;
            const double tol = kMembershipTol * (s.upper[i] - s.lower[i]);
            if (x[i] < s.lower[i] - tol || x[i] > s.upper[i] + tol) return false;
          }
          return true;
        }
      },
      shape_);
}

// ---------------------------------------------------------------------------
// Grids

Grid::Grid(const Domain& domain, std::vector<Axis> axes)
    : domain_(&domain), axes_(std::move(axes)) {
  if (static_cast<int>(axes_.size()) != domain.dim()) {
    fail(ErrorCode::kDimensionMismatch, "grid axes do not match domain dimension");
  }
  size_ = 1;
  for (const Axis& a : axes_) size_ *= static_cast<std::size_t>(a.count);
}

namespace {

void check_counts(const Domain& domain, std::span<const int> counts) {
  if (static_cast<int>(counts.size()) != domain.dim()) {
    std::ostringstream os;
    os << "grid has " << counts.size() << " axes, domain has dimension " << domain.dim();
    fail(ErrorCode::kDimensionMismatch, os.str());
  }
  for (int c : counts) {
    if (c < 2) fail(ErrorCode::kRange, "grid counts must be at least 2 on every axis");
  }
}

double coarse_step(const ParamAxis& a, int count) {
  return a.periodic ? (a.upper - a.lower) / count : (a.upper - a.lower) / (count - 1);
}

}  // namespace

Grid Grid::regular(const Domain& domain, std::span<const int> counts) {
  check_counts(domain, counts);
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const ParamAxis& a = domain.param_axes()[i];
    axes.push_back({a.lower, coarse_step(a, counts[i]), counts[i]});
  }
  return Grid(domain, std::move(axes));
}

Grid Grid::refined(const Domain& domain, std::span<const int> counts,
                   std::span<const double> center) {
  check_counts(domain, counts);
  if (static_cast<int>(center.size()) != domain.dim()) {
    fail(ErrorCode::kDimensionMismatch, "refinement center has wrong dimension");
  }
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double h = coarse_step(domain.param_axes()[i], counts[i]);
    axes.push_back({center[i] - 0.5 * h, h / (counts[i] - 1), counts[i]});
  }
  return Grid(domain, std::move(axes));
}

bool Grid::point(std::size_t index, std::span<double> param, std::span<double> x) const {
  const int n = dim();
  const auto& box = domain_->param_axes();
  for (int i = n - 1; i >= 0; --i) {
    const std::size_t count = static_cast<std::size_t>(axes_[i].count);
    const std::size_t j = index % count;
    index /= count;
    const double u = axes_[i].start + static_cast<double>(j) * axes_[i].step;
    if (!box[i].periodic) {
      const double tol = 1e-12 * (box[i].upper - box[i].lower);
      if (u < box[i].lower - tol || u > box[i].upper + tol) return false;
    }
    param[i] = u;
  }
  domain_->chart(param, x);
  return domain_->contains(x);
}

namespace {

std::vector<GridPoint> collect(const Grid& grid) {
  std::vector<GridPoint> out;
  const int n = grid.dim();
  Vector param(n), x(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.point(i, {param.data(), static_cast<std::size_t>(n)},
                   {x.data(), static_cast<std::size_t>(n)})) {
      out.push_back({i, param, x});
    }
  }
  return out;
}

}  // namespace

std::vector<GridPoint> grid_points(const Domain& domain, std::span<const int> counts) {
  return collect(Grid::regular(domain, counts));
}

std::vector<GridPoint> refine_around(const Domain& domain, std::span<const int> counts,
                                     std::span<const double> center_param) {
  return collect(Grid::refined(domain, counts, center_param));
}

// ---------------------------------------------------------------------------
// Henon

SystemCase henon_case(HenonParams params) {
  const double a = params.a, b = params.b;
  DiscreteSystem sys;
  sys.dim = 2;
  sys.map = [a, b](std::span<const double> x, std::span<double> out) {
    out[0] = a - x[0] * x[0] + b * x[1];
    out[1] = x[0];
  };
  sys.jacobian = [b](std::span<const double> x, std::span<double> out) {
    out[0] = -2.0 * x[0];
    out[1] = b;
    out[2] = 1.0;
    out[3] = 0.0;
  };

  SystemCase c;
  c.name = "henon";
  c.system = sys;
  // Trapping quadrilateral for the standard parameters.
  c.domain = Domain(QuadDomain{{{{-1.862, 1.96}, {1.848, 0.6267}, {1.743, -0.6533},
                                 {-1.484, -2.3333}}}});
  const HenonBounds bounds = henon_bounds(params);
  c.reference.lower = bounds.lower;
  c.reference.upper = bounds.upper;
  c.defaults = {3, {1000, 1000}, 16.0, 0.0, 4000};
  c.params = {{"a", a}, {"b", b}};
  return c;
}

std::pair<double, double> henon_fixed_points(HenonParams params) {
  const double a = params.a, b = params.b;
  const double root = std::sqrt((b - 1) * (b - 1) + 4 * a);
  return {(b - 1 + root) / 2, (b - 1 - root) / 2};
}

HenonBounds henon_bounds(HenonParams params) {
  const auto [x_plus, x_minus] = henon_fixed_points(params);
  const double b = params.b;
  return {std::log2(std::sqrt(x_plus * x_plus + b) + x_plus),
          std::log2(std::sqrt(x_minus * x_minus + b) - x_minus)};
}

// ---------------------------------------------------------------------------
// Bouncing ball

SystemCase bouncing_ball_case(double gamma, double delta) {
  if (!(gamma > 0.0 && gamma < 1.0)) fail(ErrorCode::kConfig, "bouncing ball needs gamma in (0, 1)");
  if (!(delta > 0.0)) fail(ErrorCode::kConfig, "bouncing ball needs delta > 0");
  DiscreteSystem sys;
  sys.dim = 2;
  sys.map = [gamma, delta](std::span<const double> x, std::span<double> out) {
    const double s = x[0] + x[1];
    out[0] = s;
    out[1] = gamma * x[1] - delta * std::cos(s);
  };
  sys.jacobian = [gamma, delta](std::span<const double> x, std::span<double> out) {
    const double ds = delta * std::sin(x[0] + x[1]);
    out[0] = 1.0;
    out[1] = 1.0;
    out[2] = ds;
    out[3] = gamma + ds;
  };

  const double band = delta / (1.0 - gamma);
  SystemCase c;
  c.name = "bouncing_ball";
  c.system = sys;
  c.domain = Domain(CylinderDomain{0, 2.0 * std::numbers::pi, {0.0, -band}, {0.0, band}});
  c.reference.entropy = bouncing_ball_entropy(gamma, delta);
  c.defaults = {0, {1000, 1000}, 1.0, 0.0, 40};
  c.params = {{"gamma", gamma}, {"delta", delta}};
  return c;
}

double bouncing_ball_entropy(double gamma, double delta) {
  const double s = 1.0 + gamma + delta;
  return std::log2(s + std::sqrt(s * s - 4.0 * gamma)) - 1.0;
}

// ---------------------------------------------------------------------------
// Lorenz

SystemCase lorenz_case(LorenzParams params) {
  const double sigma = params.sigma, rho = params.rho, beta = params.beta;
  if (!(sigma > 0 && rho > 0 && beta > 0)) fail(ErrorCode::kConfig, "Lorenz parameters must be positive");
  ContinuousSystem sys;
  sys.dim = 3;
  sys.field = [=](std::span<const double> x, std::span<double> out) {
    out[0] = sigma * (x[1] - x[0]);
    out[1] = x[0] * (rho - x[2]) - x[1];
    out[2] = x[0] * x[1] - beta * x[2];
  };
  sys.jacobian = [=](std::span<const double> x, std::span<double> out) {
    out[0] = -sigma;
    out[1] = sigma;
    out[2] = 0.0;
    out[3] = rho - x[2];
    out[4] = -1.0;
    out[5] = -x[0];
    out[6] = x[1];
    out[7] = x[0];
    out[8] = -beta;
  };

  SystemCase c;
  c.name = "lorenz";
  c.system = sys;
  c.domain = Domain(BallDomain{{0.0, 0.0, sigma + rho}, std::sqrt(beta / 2.0) * (sigma + rho)});
  c.reference.entropy = lorenz_entropy(sigma, rho, beta);
  c.defaults = {2, {500, 50, 100}, 2.0, 0.0, 4000};
  c.params = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
  return c;
}

double lorenz_entropy(double sigma, double rho, double beta) {
  (void)beta;  // the closed form does not depend on beta
  return (std::sqrt((sigma - 1) * (sigma - 1) + 4 * rho * sigma) - (sigma + 1)) /
         (2.0 * std::numbers::ln2);
}

LorenzMetricConstants lorenz_metric_constants(LorenzParams params) {
  const double s = params.sigma, r = params.rho, b = params.beta;
  LorenzMetricConstants k;
  k.a = s / std::sqrt(r * s + (b - 1) * (s - b));
  k.theta = 1.0 / (2.0 * std::sqrt((s + 1 - 2 * b) * (s + 1 - 2 * b) + (2 * s / k.a) * (2 * s / k.a)));
  k.gamma3 = -4.0 * s / (k.a * b);
  k.gamma2 = k.a / 2.0;
  k.gamma1 = -(2.0 * (k.gamma2 / s) * (r * s - (b - 1) * (b - 1)) + k.gamma3 +
               (2.0 / s) * k.a * (b - 1)) /
             (2.0 * s);
  return k;
}

LorenzReferenceMetric lorenz_reference_conformal(LorenzParams params) {
  const double s = params.sigma, r = params.rho, b = params.beta;
  const LorenzMetricConstants k = lorenz_metric_constants(params);
  const PolyBasis basis(3, 2, false);
  Vector coeffs = Vector::Zero(basis.size());
  const double scale = k.a * k.theta;
  auto set = [&](std::array<int, 3> e, double v) { coeffs(basis.index_of(e)) = v; };
  set({2, 0, 0}, scale * (k.gamma1 + k.gamma2 * (b - 1) * (b - 1) / (s * s)));
  set({0, 2, 0}, scale * k.gamma2);
  set({0, 0, 2}, scale * k.gamma2);
  set({0, 0, 1}, scale * k.gamma3);

  Matrix factor(3, 3);
  factor << (r * s + (b - 1) * (s - 1)) / (s * s), -(b - 1) / s, 0.0,
            -(b - 1) / s, 1.0, 0.0,
            0.0, 0.0, 1.0;
  return {PolyCoeffs(basis, coeffs), SpdMatrix(factor)};
}

SpdMatrix lorenz_reference_metric(double x, double y, double z, LorenzParams params) {
  const LorenzReferenceMetric m = lorenz_reference_conformal(params);
  const std::array<double, 3> pt{x, y, z};
  return SpdMatrix(Matrix(std::exp(eval_poly(m.exponent, pt)) * m.factor.matrix()));
}

// ---------------------------------------------------------------------------
// Registry

CaseRegistry::CaseRegistry() {
  factories_["henon"] = [](const std::map<std::string, double>& p) {
    reject_unknown("henon", p, {"a", "b"});
    return henon_case({param_or(p, "a", 1.4), param_or(p, "b", 0.3)});
  };
  factories_["bouncing_ball"] = [](const std::map<std::string, double>& p) {
    reject_unknown("bouncing_ball", p, {"gamma", "delta"});
    return bouncing_ball_case(param_or(p, "gamma", 0.1), param_or(p, "delta", 2.0));
  };
  factories_["lorenz"] = [](const std::map<std::string, double>& p) {
    reject_unknown("lorenz", p, {"sigma", "rho", "beta"});
    return lorenz_case({param_or(p, "sigma", 10.0), param_or(p, "rho", 28.0),
                        param_or(p, "beta", 8.0 / 3.0)});
  };
}

CaseRegistry& CaseRegistry::global() {
  static CaseRegistry registry;
  return registry;
}

void CaseRegistry::add(const std::string& name, CaseFactory factory) {
  std::lock_guard lock(registry_mutex());
  factories_[name] = std::move(factory);
}

bool CaseRegistry::contains(const std::string& name) const {
  std::lock_guard lock(registry_mutex());
  return factories_.count(name) > 0;
}

SystemCase CaseRegistry::make(const std::string& name,
                              const std::map<std::string, double>& params) const {
  CaseFactory factory;
  {
    std::lock_guard lock(registry_mutex());
    auto it = factories_.find(name);
    if (it == factories_.end()) fail(ErrorCode::kConfig, "unknown system '" + name + "'");
    factory = it->second;
  }
  return factory(params);
}

std::vector<std::string> CaseRegistry::names() const {
  std::lock_guard lock(registry_mutex());
  std::vector<std::string> out;
  for (const auto& [name, f] : factories_) out.push_back(name);
  return out;
}

SystemCase make_case(const std::string& name, const std::map<std::string, double>& params) {
  return CaseRegistry::global().make(name, params);
}

}  // namespace resent
