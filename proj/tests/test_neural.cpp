#include <catch_amalgamated.hpp>

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "oracles.hpp"
#include "safevsc/neural/checkpoint.hpp"
#include "safevsc/neural/network.hpp"
#include "safevsc/rng.hpp"

using namespace safevsc;
using namespace safevsc::neural;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double span = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-span, span);
  return v;
}

}  // namespace

TEST_CASE("initialization is seeded and shaped", "[neural]") {
  const auto a = init_network({8, 64, 64, 7}, 42);
  const auto b = init_network({8, 64, 64, 7}, 42);
  const auto c = init_network({8, 64, 64, 7}, 43);
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(a.parameter_count() == 8 * 64 + 64 + 64 * 64 + 64 + 64 * 7 + 7);
  CHECK(a.layer_sizes() == std::vector<std::size_t>{8, 64, 64, 7});
  for (const auto& l : a.layers) {
    const double bound = 1.0 / std::sqrt(double(l.in));
    for (double w : l.w) REQUIRE(std::abs(w) <= bound);
    for (double bias : l.b) REQUIRE(bias == 0.0);
  }
  CHECK_THROWS_AS(init_network({8}, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_network({8, 0, 7}, 1), std::invalid_argument);
}

TEST_CASE("forward pass examples", "[neural]") {
  auto p = init_network({8, 64, 64, 7}, 1);
  const auto zero = forward(p, std::vector<double>(8, 0.0));
  for (double q : zero) CHECK(q == 0.0);

  auto id = init_network({3, 3}, 1);
  id.layers[0].w = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  const std::vector<double> x{1.5, -2.0, 0.25};
  CHECK(forward(id, x) == x);

  CHECK_THROWS_AS(forward(p, std::vector<double>(7, 0.0)), std::invalid_argument);
}

TEST_CASE("forward pass matches the naive oracle", "[neural][oracle][property]") {
  Rng rng(2);
  for (int n = 0; n < 20; ++n) {
    auto p = init_network({8, 64, 64, 7}, 100 + n);
    for (auto& l : p.layers)
      for (auto& b : l.b) b = rng.uniform(-0.5, 0.5);
    const auto x = random_vector(rng, 8, 2.0);
    const auto got = forward(p, x);
    const auto want = oracle::mlp_forward(p, x);
    for (std::size_t k = 0; k < 7; ++k) REQUIRE_THAT(got[k], WithinAbs(want[k], 1e-12));
  }
}

TEST_CASE("batched forward agrees with single-sample forward", "[neural]") {
  const auto p = init_network({8, 32, 7}, 4);
  Rng rng(4);
  const std::size_t batch = 9;
  const auto x = random_vector(rng, batch * 8);
  Workspace ws;
  const auto y = forward_batch(p, x, batch, ws);
  for (std::size_t j = 0; j < batch; ++j) {
    const auto q = forward(p, std::span<const double>(x).subspan(j * 8, 8));
    for (std::size_t k = 0; k < 7; ++k) REQUIRE(y[k * batch + j] == q[k]);
  }
}

TEST_CASE("TD gradients match central finite differences", "[neural][oracle]") {
  Rng rng(5);
  auto p = init_network({4, 8, 7}, 9);
  for (auto& l : p.layers)
    for (auto& b : l.b) b = rng.uniform(-0.3, 0.3);
  const std::size_t batch = 16;
  const auto x = random_vector(rng, batch * 4);
  std::vector<int> a(batch);
  std::vector<double> y(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    a[j] = int(rng.below(7));
    y[j] = rng.uniform(-1.0, 1.0);
  }
  Workspace ws;
  auto grads = p.zeros_like();
  backward_td_packed(p, x, a, y, ws, grads);

  const double worst = oracle::td_gradient_error(p, grads, x, a, y);
  INFO("max relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("TD gradient scales with the residual", "[neural][property]") {
  Rng rng(6);
  const auto p = init_network({4, 8, 7}, 10);
  const auto x = random_vector(rng, 4 * 4);
  const std::vector<int> a{0, 3, 6, 2};
  Workspace ws;
  std::vector<double> q(4);
  const auto out = forward_batch(p, x, 4, ws);
  for (std::size_t j = 0; j < 4; ++j) q[j] = out[a[j] * 4 + j];

  auto g0 = p.zeros_like();
  const double loss0 = backward_td_packed(p, x, a, q, ws, g0);
  CHECK(loss0 == 0.0);
  for (auto* v : oracle::flat_params(g0)) REQUIRE(*v == 0.0);

  std::vector<double> y1(4), y2(4);
  for (std::size_t j = 0; j < 4; ++j) {
    y1[j] = q[j] + 0.5;
    y2[j] = q[j] + 1.0;
  }
  auto g1 = p.zeros_like(), g2 = p.zeros_like();
  backward_td_packed(p, x, a, y1, ws, g1);
  backward_td_packed(p, x, a, y2, ws, g2);
  auto f1 = oracle::flat_params(g1), f2 = oracle::flat_params(g2);
  for (std::size_t k = 0; k < f1.size(); ++k) REQUIRE_THAT(*f2[k], WithinAbs(2.0 * *f1[k], 1e-12));

  std::vector<TdSample> samples;
  for (std::size_t j = 0; j < 4; ++j) samples.push_back({std::span<const double>(x).subspan(j * 4, 4), a[j], y1[j]});
  const auto r = backward_td(p, samples);
  CHECK(r.grads == g1);
}

TEST_CASE("serial and parallel kernels are bit-identical", "[neural][parallel]") {
  Rng rng(7);
  const DenseShape s{64, 64, 64};
  const auto w = random_vector(rng, s.in * s.out);
  const auto b = random_vector(rng, s.out);
  const auto x = random_vector(rng, s.in * s.batch);
  const auto dy = random_vector(rng, s.out * s.batch);
  std::vector<double> y0(s.out * s.batch), dx0(s.in * s.batch), dw0(s.in * s.out), db0(s.out);
  serial::dense_forward(s, w, b, x, y0, true);
  serial::dense_backward_input(s, w, dy, dx0);
  serial::dense_backward_params(s, x, dy, dw0, db0);

  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 4, 8}) {
    omp_set_num_threads(threads);
    std::vector<double> y(y0.size()), dx(dx0.size()), dw(dw0.size()), db(db0.size());
    parallel::dense_forward(s, w, b, x, y, true);
    parallel::dense_backward_input(s, w, dy, dx);
    parallel::dense_backward_params(s, x, dy, dw, db);
    REQUIRE(y == y0);
    REQUIRE(dx == dx0);
    REQUIRE(dw == dw0);
    REQUIRE(db == db0);

    const auto p = init_network({8, 64, 64, 7}, 3);
    const auto xb = random_vector(rng, 64 * 8);
    std::vector<int> a(64);
    std::vector<double> t(64);
    for (int j = 0; j < 64; ++j) {
      a[j] = j % 7;
      t[j] = double(j) / 64.0;
    }
    Workspace ws;
    auto gs = p.zeros_like(), gp = p.zeros_like();
    const double ls = backward_td_packed(p, xb, a, t, ws, gs, Exec::serial);
    const double lp = backward_td_packed(p, xb, a, t, ws, gp, Exec::parallel);
    REQUIRE(ls == lp);
    REQUIRE(gs == gp);
  }
  omp_set_num_threads(saved);
}

TEST_CASE("Adam step examples", "[neural]") {
  auto p = init_network({3, 4, 2}, 8);
  const auto before = p;
  auto st = AdamState::for_network(p, 1e-3);
  adam_step(p, p.zeros_like(), st);
  CHECK(p == before);

  auto g = p.zeros_like();
  for (auto* v : oracle::flat_params(g)) *v = 0.37;
  auto q = before;
  auto st2 = AdamState::for_network(q, 1e-3);
  adam_step(q, g, st2);
  auto fq = oracle::flat_params(q);
  auto b = before;
  auto fb = oracle::flat_params(b);
  for (std::size_t k = 0; k < fq.size(); ++k)
    REQUIRE_THAT(*fq[k] - *fb[k], WithinRel(-1e-3 * 0.37 / (0.37 + 1e-8), 1e-9));

  // With a constant gradient the bias-corrected step stays at the learning rate.
  for (int n = 0; n < 50; ++n) adam_step(q, g, st2);
  auto fq2 = oracle::flat_params(q);
  CHECK_THAT(*fq2[0] - *fb[0], WithinRel(-51e-3 * 0.37 / (0.37 + 1e-8), 1e-6));
}

TEST_CASE("regression on a line", "[neural]") {
  auto p = init_network({1, 16, 1}, 21);
  auto st = AdamState::for_network(p, 1e-2);
  const std::size_t batch = 32;
  std::vector<double> x(batch), y(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    x[j] = -1.0 + 2.0 * double(j) / double(batch - 1);
    y[j] = 2.0 * x[j];
  }
  Workspace ws;
  auto g = p.zeros_like();
  double loss = 0.0;
  for (int it = 0; it < 2000; ++it) {
    loss = backward_mse(p, x, y, batch, ws, g);
    adam_step(p, g, st);
  }
  CHECK(loss < 1e-3);
}

TEST_CASE("checkpoint round trip", "[neural][checkpoint]") {
  auto p = init_network({8, 16, 7}, 31);
  p.layers[0].b[3] = -1.25e-7;
  const nlohmann::json meta{{"seed", 31}, {"note", "x"}};
  const auto bytes = encode_checkpoint(p, meta);
  CHECK(bytes.substr(0, 8) == "SVQNET01");
  CHECK(static_cast<unsigned char>(bytes[8]) == kCheckpointVersion);
  CHECK(bytes[9] == 0);

  const auto back = decode_checkpoint(bytes);
  CHECK(back.params == p);
  CHECK(back.meta == meta);

  const auto path = std::filesystem::temp_directory_path() / "safevsc_test_ckpt.bin";
  save_checkpoint(path, p, meta);
  CHECK(load_checkpoint(path).params == p);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects foreign or damaged files", "[neural][checkpoint]") {
  const auto p = init_network({8, 16, 7}, 31);
  const auto bytes = encode_checkpoint(p, nlohmann::json::object());

  auto wrong_version = bytes;
  wrong_version[8] = 2;
  CHECK_THROWS_WITH(decode_checkpoint(wrong_version), ContainsSubstring("checkpoint version mismatch"));
  CHECK_THROWS_WITH(decode_checkpoint("not a checkpoint at all"), ContainsSubstring("checkpoint version mismatch"));
  CHECK_THROWS_WITH(decode_checkpoint(""), ContainsSubstring("checkpoint version mismatch"));

  auto truncated = bytes.substr(0, bytes.size() - 20);
  CHECK_THROWS_WITH(decode_checkpoint(truncated), ContainsSubstring("corrupt checkpoint"));
  auto flipped = bytes;
  flipped[bytes.size() - 30] ^= 0x10;
  CHECK_THROWS_WITH(decode_checkpoint(flipped), ContainsSubstring("corrupt checkpoint"));
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/agent.bin"), CheckpointError);
}
