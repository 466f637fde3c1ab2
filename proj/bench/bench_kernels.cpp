// Serial reference kernels against their OpenMP counterparts.
//
//   ./bench_kernels --benchmark_filter=forward
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <vector>

#include "safevsc/neural/kernels.hpp"
#include "safevsc/neural/network.hpp"
#include "safevsc/rng.hpp"

using namespace safevsc;
using namespace safevsc::neural;

namespace {

struct Buffers {
  DenseShape s;
  std::vector<double> w, b, x, y, dy, dx, dw, db;
  explicit Buffers(DenseShape shape) : s(shape) {
    Rng rng(1);
    auto fill = [&](std::vector<double>& v, std::size_t n) {
      v.resize(n);
      for (auto& e : v) e = rng.uniform(-1, 1);
    };
    fill(w, s.in * s.out);
    fill(b, s.out);
    fill(x, s.in * s.batch);
    fill(dy, s.out * s.batch);
    y.resize(s.out * s.batch);
    dx.resize(s.in * s.batch);
    dw.resize(s.in * s.out);
    db.resize(s.out);
  }
};

DenseShape shape_of(const benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  return {n, n, static_cast<std::size_t>(st.range(1))};
}

void set_counters(benchmark::State& st, const DenseShape& s) {
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * s.in * s.out * s.batch));
}

template <Exec E>
void BM_forward(benchmark::State& st) {
  Buffers buf(shape_of(st));
  for (auto _ : st) {
    dense_forward(E, buf.s, buf.w, buf.b, buf.x, buf.y, true);
    benchmark::DoNotOptimize(buf.y.data());
  }
  set_counters(st, buf.s);
}

template <Exec E>
void BM_backward_input(benchmark::State& st) {
  Buffers buf(shape_of(st));
  for (auto _ : st) {
    dense_backward_input(E, buf.s, buf.w, buf.dy, buf.dx);
    benchmark::DoNotOptimize(buf.dx.data());
  }
  set_counters(st, buf.s);
}

template <Exec E>
void BM_backward_params(benchmark::State& st) {
  Buffers buf(shape_of(st));
  for (auto _ : st) {
    dense_backward_params(E, buf.s, buf.x, buf.dy, buf.dw, buf.db);
    benchmark::DoNotOptimize(buf.dw.data());
  }
  set_counters(st, buf.s);
}

// One full minibatch gradient of the default Q-network.
template <Exec E>
void BM_td_batch(benchmark::State& st) {
  const auto p = init_network({8, 64, 64, 7}, 1);
  const auto batch = static_cast<std::size_t>(st.range(0));
  Rng rng(2);
  std::vector<double> x(batch * 8), y(batch);
  std::vector<int> a(batch);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (std::size_t j = 0; j < batch; ++j) {
    a[j] = int(rng.below(7));
    y[j] = rng.uniform(-1, 1);
  }
  Workspace ws;
  auto g = p.zeros_like();
  for (auto _ : st) benchmark::DoNotOptimize(backward_td_packed(p, x, a, y, ws, g, E));
}

void shapes(benchmark::internal::Benchmark* b) {
  for (int n : {64, 256})
    for (int batch : {64, 512}) b->Args({n, batch});
}

}  // namespace

BENCHMARK(BM_forward<Exec::serial>)->Apply(shapes);
BENCHMARK(BM_forward<Exec::parallel>)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_backward_input<Exec::serial>)->Apply(shapes);
BENCHMARK(BM_backward_input<Exec::parallel>)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_backward_params<Exec::serial>)->Apply(shapes);
BENCHMARK(BM_backward_params<Exec::parallel>)->Apply(shapes)->UseRealTime();
BENCHMARK(BM_td_batch<Exec::serial>)->Arg(64)->Arg(1024);
BENCHMARK(BM_td_batch<Exec::parallel>)->Arg(64)->Arg(1024)->UseRealTime();

BENCHMARK_MAIN();
