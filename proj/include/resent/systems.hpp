#pragma once

// Dynamical systems, compact domains with charts, regular grids, and the
// three built-in case studies with their closed-form reference values.

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "resent/spd.hpp"
#include "resent/poly.hpp"

namespace resent {

/// out = f(x). Buffers are caller-owned so evaluation never allocates.
using FieldFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// out = Df(x) in row-major order (n * n entries).
using JacobianFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// x(t+1) = map(x(t)).
struct DiscreteSystem {
  int dim = 0;
  FieldFn map;
  JacobianFn jacobian;
};

/// dx/dt = field(x).
struct ContinuousSystem {
  int dim = 0;
  FieldFn field;
  JacobianFn jacobian;
};

using System = std::variant<DiscreteSystem, ContinuousSystem>;

int system_dim(const System& s);
bool is_discrete(const System& s);

/// Central differences with step h * max(1, |x_i|); the fallback for
/// user-registered systems without an analytic Jacobian.
JacobianFn numeric_jacobian(int dim, FieldFn f, double h = 1e-6);

Vector eval_field(const FieldFn& f, int dim, std::span<const double> x);
Matrix eval_jacobian(const JacobianFn& j, int dim, std::span<const double> x);

struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Convex quadrilateral in the plane, corners in order. Charted by the
/// bilinear map (u, v) -> (1-u)(1-v) c0 + u(1-v) c1 + uv c2 + (1-u)v c3.
struct QuadDomain {
  std::array<std::array<double, 2>, 4> corners;
};

/// Closed 3-ball charted by spherical coordinates (radius in [0, R],
/// azimuthal angle in [0, pi], polar angle in [0, 2 pi]):
/// center + r (sin az cos pol, sin az sin pol, cos az).
struct BallDomain {
  std::array<double, 3> center;
  double radius = 0.0;
};

/// S^1 x box. Axis `angle_axis` is periodic with the given period; the
/// remaining axes are bounded by lower/upper (entries at angle_axis ignored).
struct CylinderDomain {
  int angle_axis = 0;
  double period = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// One axis of the parameter box a domain is charted from.
struct ParamAxis {
  double lower = 0.0;
  double upper = 0.0;
  bool periodic = false;
};

class Domain {
 public:
  using Variant = std::variant<BoxDomain, QuadDomain, BallDomain, CylinderDomain>;

  Domain() = default;
  explicit Domain(Variant v);

  int dim() const { return dim_; }
  const Variant& shape() const { return shape_; }
  bool is_cylinder() const { return std::holds_alternative<CylinderDomain>(shape_); }

  const std::vector<ParamAxis>& param_axes() const { return axes_; }

  /// Parameter-space coordinates to a point in R^n.
  void chart(std::span<const double> u, std::span<double> x) const;

  /// Membership in K, with a small relative tolerance for chart round-off.
  /// Periodic coordinates are taken modulo the period.
  bool contains(std::span<const double> x) const;

 private:
  Variant shape_;
  int dim_ = 0;
  std::vector<ParamAxis> axes_;
};

/// Regular grid over the parameter box. Non-periodic axes include both
/// endpoints, z = a + j (b - a) / (N - 1); periodic axes use (b - a) / N.
/// Points are addressed by their row-major linear index (first axis slowest);
/// indices whose parameter lies outside the box or whose image lies outside
/// the domain are skipped.
class Grid {
 public:
  struct Axis {
    double start = 0.0;
    double step = 0.0;
    int count = 0;
  };

  Grid(const Domain& domain, std::vector<Axis> axes);

  /// The coarse grid. Every count must be at least 2.
  static Grid regular(const Domain& domain, std::span<const int> counts);

  /// Scaled copy of the regular grid on center + prod [-h_i/2, h_i/2], with
  /// spacing h_i / (N_i - 1).
  static Grid refined(const Domain& domain, std::span<const int> counts,
                      std::span<const double> center);

  std::size_t size() const { return size_; }
  int dim() const { return domain_->dim(); }
  const std::vector<Axis>& axes() const { return axes_; }

  /// Writes parameter and physical coordinates of `index`; false when the
  /// point is filtered out.
  bool point(std::size_t index, std::span<double> param, std::span<double> x) const;

 private:
  const Domain* domain_;
  std::vector<Axis> axes_;
  std::size_t size_ = 0;
};

struct GridPoint {
  std::size_t index = 0;
  Vector param;
  Vector x;
};

std::vector<GridPoint> grid_points(const Domain& domain, std::span<const int> counts);
std::vector<GridPoint> refine_around(const Domain& domain, std::span<const int> counts,
                                     std::span<const double> center_param);

struct ReferenceValues {
  std::optional<double> entropy;
  std::optional<double> lower;
  std::optional<double> upper;
};

struct CaseDefaults {
  int degree = 0;
  std::vector<int> grid;
  double step_a = 1.0;
  double step_b = 0.0;
  int max_iters = 100;
};

struct SystemCase {
  std::string name;
  System system;
  Domain domain;
  ReferenceValues reference;
  CaseDefaults defaults;
  std::map<std::string, double> params;

  int dim() const { return system_dim(system); }
  bool discrete() const { return is_discrete(system); }
};

// Built-in case studies.

struct HenonParams {
  double a = 1.4;
  double b = 0.3;
};

SystemCase henon_case(HenonParams params = {});

struct HenonBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Fixed-point abscissae x_+ and x_- of the Henon map.
std::pair<double, double> henon_fixed_points(HenonParams params = {});
HenonBounds henon_bounds(HenonParams params = {});

SystemCase bouncing_ball_case(double gamma = 0.1, double delta = 2.0);
double bouncing_ball_entropy(double gamma, double delta);

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

SystemCase lorenz_case(LorenzParams params = {});
double lorenz_entropy(double sigma, double rho, double beta);

/// Constants of the known optimal Lorenz metric.
struct LorenzMetricConstants {
  double a = 0.0;
  double theta = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
};

LorenzMetricConstants lorenz_metric_constants(LorenzParams params = {});

/// The optimal metric as a conformal pair: exponent in the degree-2 basis
/// without constant term, and the constant matrix factor.
struct LorenzReferenceMetric {
  PolyCoeffs exponent;
  SpdMatrix factor;
};

LorenzReferenceMetric lorenz_reference_conformal(LorenzParams params = {});
SpdMatrix lorenz_reference_metric(double x, double y, double z, LorenzParams params = {});

/// Factory keyed by system name. Parameter overrides are by name
/// ("a", "b", "gamma", "delta", "sigma", "rho", "beta").
using CaseFactory = std::function<SystemCase(const std::map<std::string, double>&)>;

class CaseRegistry {
 public:
  /// Registry preloaded with "henon", "bouncing_ball" and "lorenz".
  static CaseRegistry& global();

  void add(const std::string& name, CaseFactory factory);
  bool contains(const std::string& name) const;
  SystemCase make(const std::string& name, const std::map<std::string, double>& params = {}) const;
  std::vector<std::string> names() const;

 private:
  CaseRegistry();
  std::map<std::string, CaseFactory> factories_;
};

SystemCase make_case(const std::string& name, const std::map<std::string, double>& params = {});

}  // namespace resent
