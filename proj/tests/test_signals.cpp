#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "safevsc/rng.hpp"
#include "safevsc/signals.hpp"

using namespace safevsc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("clarke maps phase a alone onto the alpha axis", "[signals]") {
  const auto v = clarke(1.0, 0.0, 0.0);
  CHECK_THAT(v.alpha, WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(v.beta, WithinAbs(0.0, 1e-15));
}

TEST_CASE("clarke is amplitude invariant for balanced sets", "[signals]") {
  const auto v = clarke(1.0, -0.5, -0.5);
  CHECK_THAT(v.alpha, WithinAbs(1.0, 1e-15));
  CHECK_THAT(v.beta, WithinAbs(0.0, 1e-15));

  const double a = 100.0;
  for (double th : {0.0, 0.3, 1.1, 2.5, 4.0, 5.9}) {
    const auto u = clarke(a * std::cos(th), a * std::cos(th - 2.0 * std::numbers::pi / 3.0),
                          a * std::cos(th + 2.0 * std::numbers::pi / 3.0));
    CHECK_THAT(u.norm(), WithinRel(a, 1e-12));
    CHECK_THAT(u.alpha, WithinAbs(a * std::cos(th), 1e-12));
    CHECK_THAT(u.beta, WithinAbs(a * std::sin(th), 1e-12));
  }
}

TEST_CASE("inverse clarke of a pure alpha vector", "[signals]") {
  const auto p = inverse_clarke({1.0, 0.0});
  CHECK_THAT(p.a, WithinAbs(1.0, 1e-15));
  CHECK_THAT(p.b, WithinAbs(-0.5, 1e-15));
  CHECK_THAT(p.c, WithinAbs(-0.5, 1e-15));
}

TEST_CASE("clarke of inverse clarke is the identity", "[signals][property]") {
  Rng rng(42);
  for (int n = 0; n < 2000; ++n) {
    const AlphaBeta v{rng.uniform(-600.0, 600.0), rng.uniform(-600.0, 600.0)};
    const auto back = clarke(inverse_clarke(v));
    const double scale = std::max(1.0, v.norm());
    REQUIRE(std::abs(back.alpha - v.alpha) <= 1e-12 * scale);
    REQUIRE(std::abs(back.beta - v.beta) <= 1e-12 * scale);
    const auto p = inverse_clarke(v);
    REQUIRE(std::abs(p.a + p.b + p.c) <= 1e-12 * scale);
  }
}

TEST_CASE("reference values at known instants", "[signals]") {
  const ReferenceSpec spec{};
  const auto r0 = reference_at(spec, 0.0);
  CHECK_THAT(r0.alpha, WithinAbs(200.0, 1e-12));
  CHECK_THAT(r0.beta, WithinAbs(0.0, 1e-12));

  const auto rq = reference_at(spec, 0.005);
  CHECK_THAT(rq.alpha, WithinAbs(0.0, 1e-9));
  CHECK_THAT(rq.beta, WithinAbs(200.0, 1e-9));
}

TEST_CASE("reference magnitude is constant and periodic", "[signals][property]") {
  ReferenceSpec spec{};
  spec.phase0 = 0.7;
  Rng rng(7);
  for (int n = 0; n < 1000; ++n) {
    const double t = rng.uniform(0.0, 1.0);
    const auto r = reference_at(spec, t);
    REQUIRE_THAT(r.norm(), WithinRel(200.0, 1e-12));
    const auto r2 = reference_at(spec, t + 1.0 / spec.frequency);
    REQUIRE_THAT(r2.alpha, WithinAbs(r.alpha, 1e-8));
    REQUIRE_THAT(r2.beta, WithinAbs(r.beta, 1e-8));
  }
}

TEST_CASE("reference rejects non-physical settings", "[signals]") {
  ReferenceSpec bad{};
  bad.frequency = 0.0;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.amplitude = -1.0;
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(ReferenceSpec{}.validate());
}

TEST_CASE("derived rng streams are reproducible and distinct", "[signals][rng]") {
  Rng a(Rng::derive(5, 1)), b(Rng::derive(5, 1)), c(Rng::derive(5, 2));
  bool differs = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next();
    REQUIRE(x == b.next());
    differs = differs || x != c.next();
  }
  CHECK(differs);
  Rng u(3);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    REQUIRE(u.below(7) < 7u);
  }
}
