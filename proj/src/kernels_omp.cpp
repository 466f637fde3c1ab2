#include <omp.h>

#include <cstdint>

#include "safevsc/neural/kernels.hpp"

namespace safevsc::neural::parallel {

namespace {
// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t kMinWork = 1 << 14;

bool worth_forking(DenseShape s) { return s.in * s.out * s.batch >= kMinWork && omp_get_max_threads() > 1; }
}  // namespace

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu) {
  const auto nb = static_cast<std::int64_t>(s.batch);
  const auto n_out = static_cast<std::int64_t>(s.out);
  const auto n_in = static_cast<std::int64_t>(s.in);
#pragma omp parallel for schedule(static) if (worth_forking(s))
  for (std::int64_t o = 0; o < n_out; ++o) {
    double* yo = y.data() + o * nb;
    for (std::int64_t j = 0; j < nb; ++j) yo[j] = b[static_cast<std::size_t>(o)];
    for (std::int64_t i = 0; i < n_in; ++i) {
      const double wi = w[static_cast<std::size_t>(o * n_in + i)];
      const double* xi = x.data() + i * nb;
      for (std::int64_t j = 0; j < nb; ++j) yo[j] += wi * xi[j];
    }
    if (relu)
      for (std::int64_t j = 0; j < nb; ++j) yo[j] = yo[j] > 0.0 ? yo[j] : 0.0;
  }
}

void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx) {
  const auto nb = static_cast<std::int64_t>(s.batch);
  const auto n_out = static_cast<std::int64_t>(s.out);
  const auto n_in = static_cast<std::int64_t>(s.in);
#pragma omp parallel for schedule(static) if (worth_forking(s))
  for (std::int64_t i = 0; i < n_in; ++i) {
    double* dxi = dx.data() + i * nb;
    for (std::int64_t j = 0; j < nb; ++j) dxi[j] = 0.0;
    for (std::int64_t o = 0; o < n_out; ++o) {
      const double wo = w[static_cast<std::size_t>(o * n_in + i)];
      const double* dyo = dy.data() + o * nb;
      for (std::int64_t j = 0; j < nb; ++j) dxi[j] += wo * dyo[j];
    }
  }
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
  const auto nb = static_cast<std::int64_t>(s.batch);
  const auto n_out = static_cast<std::int64_t>(s.out);
  const auto n_in = static_cast<std::int64_t>(s.in);
#pragma omp parallel for schedule(static) if (worth_forking(s))
  for (std::int64_t o = 0; o < n_out; ++o) {
    const double* dyo = dy.data() + o * nb;
    double acc_b = 0.0;
    for (std::int64_t j = 0; j < nb; ++j) acc_b += dyo[j];
    db[static_cast<std::size_t>(o)] = acc_b;
    for (std::int64_t i = 0; i < n_in; ++i) {
      const double* xi = x.data() + i * nb;
      double acc = 0.0;
      for (std::int64_t j = 0; j < nb; ++j) acc += dyo[j] * xi[j];
      dw[static_cast<std::size_t>(o * n_in + i)] = acc;
    }
  }
}

}  // namespace safevsc::neural::parallel
