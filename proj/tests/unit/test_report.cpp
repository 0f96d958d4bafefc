#include "doctest.h"
#include "resent/error.hpp"
#include "resent/report.hpp"

using namespace resent;

namespace {

ErrorCode code_of(auto f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidInput;
}

}  // namespace

TEST_CASE("config parsing fills fields and rejects bad input") {
  const RunConfig c = parse_run_config(json::parse(R"({
    "system": "henon", "params": {"a": 1.3}, "degree": 2, "grid": [50, 60],
    "step": {"a": 4}, "max_iters": 7, "workers": 2,
    "poly_frame": {"center": [0, 0.1], "scale": [2, 3]}})"));
  CHECK(c.system == "henon");
  CHECK(c.params.at("a") == 1.3);
  CHECK(*c.degree == 2);
  CHECK(c.step->a == 4.0);
  CHECK(c.step->b == 0.0);
  CHECK(c.frame.scale == std::vector<double>{2.0, 3.0});

  CHECK(code_of([] { parse_run_config(json::parse(R"({"system": "henon", "typo": 1})")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config(json::parse(R"({"degree": 1})")); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config(json::parse(R"({"system": "henon", "grid": [1, 5]})")); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] {
          parse_run_config(json::parse(R"({"system": "henon", "poly_frame": {"scale": [1, 0]}})"));
        }) == ErrorCode::kConfig);
}

TEST_CASE("config is validated against the system") {
  CHECK(code_of([] { make_case(parse_run_config(json::parse(R"({"system": "henon", "grid": [5, 5, 5]})"))); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] { make_case(parse_run_config(json::parse(R"({"system": "bouncing_ball", "degree": 1})"))); }) ==
        ErrorCode::kConfig);
  CHECK(code_of([] {
          make_case(parse_run_config(json::parse(R"({"system": "lorenz", "poly_frame": {"center": [1, 2]}})")));
        }) == ErrorCode::kConfig);
}

TEST_CASE("metric documents round-trip, frame included") {
  const SystemCase c = henon_case();
  const PolyBasis b(2, 2, false, PolyFrame{{0.5, -0.5}, {2.0, 4.0}});
  Vector a(b.size());
  a << 0.1, -0.2, 0.3, 0.4, -0.5;
  const ConformalMetric m(PolyCoeffs(b, a),
                          SpdMatrix(Matrix((Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished())));
  const json j = metric_to_json(c, m, GridConfig{{10, 20}, false, 0});
  CHECK(j["basis"]["ordering"] == "grlex-v1");
  const MetricFile back = metric_from_json(json::parse(j.dump()));
  CHECK(back.system == "henon");
  CHECK(back.metric.coeffs.basis == b);
  CHECK(back.metric.coeffs.a == a);
  CHECK(back.metric.p.matrix() == m.p.matrix());
  CHECK(back.grid->counts == std::vector<int>{10, 20});
  CHECK_FALSE(back.grid->refine);
}

TEST_CASE("metric documents with another ordering are refused") {
  json j = metric_to_json(henon_case(), ConformalMetric::identity(PolyBasis(2, 1)),
                          GridConfig{{10, 10}, true, 0});
  j["basis"]["ordering"] = "lex-v0";
  CHECK(code_of([&] { metric_from_json(j); }) == ErrorCode::kConfig);
  j["basis"]["ordering"] = "grlex-v1";
  j["basis"]["monomials"] = {{0, 1}, {1, 0}};
  CHECK(code_of([&] { metric_from_json(j); }) == ErrorCode::kConfig);
}

TEST_CASE("iterations csv round-trips the plotted columns") {
  std::vector<IterationRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].k = i + 1;
    recs[i].value = 1.0 / (i + 1.0) + 0.1;
    recs[i].best_value = recs[i].value;
    recs[i].x_star = Vector::Constant(2, 0.1 * i);
  }
  const std::string csv = iterations_csv(recs, 2);
  CHECK(csv.rfind("k,theta,value,best_value,k_star,subgrad_norm,gap_ok,x_star_1,x_star_2\n", 0) == 0);
  const auto pts = parse_iterations_csv(csv);
  REQUIRE(pts.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(pts[i].k == i + 1);
    CHECK(pts[i].value == recs[i].value);
  }
  const std::string svg = render_convergence_svg(pts, "t");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("bounds documents") {
  const json h = bounds_json(henon_case());
  CHECK(h["lower"].get<double>() == doctest::Approx(0.943913).epsilon(1e-6));
  const json l = bounds_json(lorenz_case());
  CHECK(l["entropy"].get<double>() == doctest::Approx(17.063797968).epsilon(1e-10));
}
