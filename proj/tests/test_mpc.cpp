#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "safevsc/mpc.hpp"
#include "safevsc/rng.hpp"

using namespace safevsc;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

PlantState random_state(Rng& rng, double i_span = 20.0) {
  PlantState s;
  s.i_f = {rng.uniform(-i_span, i_span), rng.uniform(-i_span, i_span)};
  s.v_f = {rng.uniform(-300, 300), rng.uniform(-300, 300)};
  return s;
}

}  // namespace

TEST_CASE("prediction with a matched model equals the plant step", "[mpc]") {
  MpcConfig cfg;
  const FcsMpc mpc(cfg);
  const auto truth = discretize(PlantParams{}, Scheme::exact_zoh);
  Rng rng(1);
  for (int n = 0; n < 100; ++n) {
    const auto s = random_state(rng);
    const auto a = make_action(1 + int(rng.below(7)));
    REQUIRE(mpc.predict(s, a) == step(s, a, truth, PlantParams{}));
    REQUIRE(predict_one_step(s, a, cfg) == mpc.predict(s, a));
  }
  CHECK(mpc.predict(PlantState{}, make_action(7)).i_f.norm() == 0.0);
}

TEST_CASE("a mismatched belief scales the predicted current", "[mpc]") {
  MpcConfig cfg;
  cfg.model_params.l_f *= 1.3;
  const FcsMpc believed(cfg);
  const auto truth = step(PlantState{}, make_action(1), discretize(PlantParams{}, Scheme::exact_zoh), PlantParams{});
  const auto pred = believed.predict(PlantState{}, make_action(1));
  CHECK(pred.i_f.alpha < truth.i_f.alpha);
  CHECK_THAT(pred.i_f.alpha / truth.i_f.alpha, WithinRel(believed.model().b_d.m00 /
                                                             discretize(PlantParams{}, Scheme::exact_zoh).b_d.m00,
                                                         1e-12));
}

TEST_CASE("cost values", "[mpc]") {
  PlantState pred;
  pred.v_f = {190.0, 0.0};
  pred.i_f = {10.0, 0.0};
  CHECK(mpc_cost(pred, {200.0, 0.0}, 20.0) == 100.0);
  pred.i_f = {19.0, 7.0};
  CHECK(mpc_cost(pred, {200.0, 0.0}, 20.0) == kInfeasibleCost);
  pred.i_f = {20.0, 0.0};
  CHECK(mpc_cost(pred, {200.0, 0.0}, 20.0) == 100.0);
  pred.v_f = {200.0, 0.0};
  CHECK(mpc_cost(pred, {200.0, 0.0}, 20.0) == 0.0);
}

TEST_CASE("selection from rest towards a reference on the alpha axis", "[mpc]") {
  const FcsMpc mpc(MpcConfig{});
  const auto d = mpc.select(PlantState{}, {200.0, 0.0}, make_action(7));
  CHECK(d.action.index == 1);
  CHECK_FALSE(d.all_infeasible);
}

TEST_CASE("a vector reaching the reference exactly is selected", "[mpc]") {
  const FcsMpc mpc(MpcConfig{});
  PlantState s;
  s.i_f = {3.0, -2.0};
  s.v_f = {120.0, 80.0};
  for (int target = 1; target <= 7; ++target) {
    const auto ref = mpc.predict(s, make_action(target)).v_f;
    const auto d = mpc.select(s, ref, make_action(target == 1 ? 2 : 1));
    CHECK(d.action.index == target);
    CHECK(d.cost == 0.0);
  }
}

TEST_CASE("ties keep the previous action", "[mpc]") {
  // Euler prediction has no direct path from v_i to v_f, so every vector
  // produces the same voltage cost.
  MpcConfig cfg;
  cfg.prediction_scheme = Scheme::euler;
  const FcsMpc mpc(cfg);
  PlantState s;
  s.v_f = {50.0, 20.0};
  for (int prev = 1; prev <= 7; ++prev) {
    const auto d = mpc.select(s, {200.0, 0.0}, make_action(prev));
    CHECK(d.action.index == prev);
  }
}

TEST_CASE("all infeasible falls back to the smallest predicted current", "[mpc]") {
  MpcConfig cfg;
  const FcsMpc mpc(cfg);
  PlantState s;
  s.i_f = {100.0, 0.0};
  const auto d = mpc.select(s, {200.0, 0.0}, make_action(1));
  const auto bf = oracle::brute_force(s, {200.0, 0.0}, PlantParams{}, mpc.model(), cfg.i_max);
  CHECK(d.all_infeasible);
  int least = 1;
  for (int k = 2; k <= 7; ++k)
    if (bf.norms[k - 1] < bf.norms[least - 1]) least = k;
  CHECK(d.action.index == least);
  CHECK(d.action.index == 4);
}

TEST_CASE("selection is the brute-force minimizer", "[mpc][oracle][property]") {
  MpcConfig cfg;
  const FcsMpc mpc(cfg);
  Rng rng(3);
  for (int n = 0; n < 3000; ++n) {
    const auto s = random_state(rng, 22.0);
    const AlphaBeta ref{rng.uniform(-250, 250), rng.uniform(-250, 250)};
    const auto prev = make_action(1 + int(rng.below(7)));
    const auto d = mpc.select(s, ref, prev);
    const auto bf = oracle::brute_force(s, ref, PlantParams{}, mpc.model(), cfg.i_max);
    if (std::isinf(bf.best_cost)) {
      REQUIRE(d.all_infeasible);
      continue;
    }
    REQUIRE_FALSE(d.all_infeasible);
    REQUIRE_THAT(d.cost, WithinRel(bf.best_cost, 1e-9) || WithinAbs(bf.best_cost, 1e-9));
    for (int k = 0; k < 7; ++k) REQUIRE(d.cost <= bf.costs[k] * (1 + 1e-9) + 1e-9);
  }
}

TEST_CASE("closed loop tracks the reference within the current limit", "[mpc]") {
  const PlantParams p{};
  const auto plant = discretize(p, Scheme::exact_zoh);
  MpcConfig cfg;
  const FcsMpc mpc(cfg);
  const ReferenceSpec spec{};
  PlantState x;
  SwitchAction prev = make_action(7);
  double err2 = 0.0;
  int measured = 0;
  int unsafe_with_safe_option = 0;
  for (int k = 0; k < 4000; ++k) {
    const auto ref = reference_at(spec, (k + 1) * p.t_s);
    const auto d = mpc.select(x, ref, prev);
    x = step(x, d.action, plant, p);
    prev = d.action;
    if (!d.all_infeasible && x.i_f.norm() > cfg.i_max) ++unsafe_with_safe_option;
    if (k >= 2000) {
      err2 += (ref - x.v_f).squared_norm();
      ++measured;
    }
  }
  CHECK(std::sqrt(err2 / measured) < 0.05 * spec.amplitude);
  CHECK(unsafe_with_safe_option == 0);
}

TEST_CASE("damping term", "[mpc]") {
  PlantState pred;
  pred.i_f = {1.0, 2.0};
  pred.v_f = {100.0, -50.0};
  const PlantParams p{};
  const double w = 314.0;
  const AlphaBeta ref{150.0, 30.0};
  const double io_a = 100.0 / 50.0, io_b = -50.0 / 50.0;
  const double e1 = p.c_f * w * ref.beta - 1.0 + io_a;
  const double e2 = p.c_f * w * ref.alpha + 2.0 - io_b;
  CHECK_THAT(derivative_cost(pred, ref, p, w), WithinRel(e1 * e1 + e2 * e2, 1e-12));

  MpcConfig plain, damped;
  damped.lambda_d = 0.5;
  const FcsMpc a(plain), b(damped);
  CHECK(a.cost(pred, ref) == mpc_cost(pred, ref, 20.0));
  CHECK(b.cost(pred, ref) > a.cost(pred, ref));
}

TEST_CASE("configuration validation", "[mpc]") {
  MpcConfig c;
  CHECK_NOTHROW(c.validate());
  c.i_max = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.lambda_d = -1.0;
  CHECK_THROWS(c.validate());
}
