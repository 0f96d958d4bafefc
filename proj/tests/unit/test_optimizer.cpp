#include "doctest.h"
#include "resent/error.hpp"
#include "resent/optimizer.hpp"

using namespace resent;

TEST_CASE("step rule theta_k = a / (k + b)") {
  const StepRule r{2.0, 3.0};
  CHECK(r.at(1) == doctest::Approx(0.5));
  CHECK(r.at(7) == doctest::Approx(0.2));
}

TEST_CASE("steps are normalized and a zero subgradient is refused") {
  const ConformalMetric m = ConformalMetric::identity(PolyBasis(2, 1));
  const TangentVector zero{Vector::Zero(2), SymMatrix::zero(2), 0.0};
  CHECK_THROWS_AS(step(m, zero, 0.5), Error);
  Vector s1(2);
  s1 << 3.0, 4.0;
  const TangentVector s{s1, SymMatrix::zero(2), 5.0};
  const ConformalMetric next = step(m, s, 0.5);
  // Moves theta along -s / |s|.
  CHECK(next.coeffs.a(0) == doctest::Approx(-0.3));
  CHECK(next.coeffs.a(1) == doctest::Approx(-0.4));
  CHECK((next.p.matrix() - Matrix::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("run records are 1-based with a running best") {
  const SystemCase c = henon_case();
  RunSettings s;
  s.degree = 1;
  s.grid = GridConfig{{40, 40}, true, 2};
  s.step = {1.0, 0.0};
  s.max_iters = 5;
  int calls = 0;
  const RunResult r = run(c, s, [&](const IterationRecord&) { ++calls; });
  REQUIRE(r.records.size() == 6);
  CHECK(calls == 6);
  double best = 1e300;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const IterationRecord& rec = r.records[i];
    CHECK(rec.k == static_cast<int>(i) + 1);
    best = std::min(best, rec.value);
    CHECK(rec.best_value == best);
  }
  CHECK(r.records.back().theta == 0.0);
  CHECK(r.best_value == best);
  CHECK(r.records[static_cast<std::size_t>(r.best_iteration) - 1].value == best);
  CHECK_FALSE(r.abort_reason.has_value());
}

TEST_CASE("run refuses an initial metric in another basis") {
  RunSettings s;
  s.degree = 2;
  s.grid = GridConfig{{10, 10}, false, 1};
  s.max_iters = 1;
  s.initial = ConformalMetric::identity(PolyBasis(2, 1));
  try {
    run(henon_case(), s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
  }
}

TEST_CASE("a frame changes the iterates but not the starting value") {
  const SystemCase c = henon_case();
  RunSettings s;
  s.degree = 2;
  s.grid = GridConfig{{30, 30}, true, 1};
  s.max_iters = 3;
  const RunResult plain = run(c, s);
  s.frame = PolyFrame{{0.5, 0.0}, {2.0, 0.5}};
  const RunResult framed = run(c, s);
  CHECK(plain.records[0].value == framed.records[0].value);
  CHECK(plain.records[1].value != framed.records[1].value);
}
