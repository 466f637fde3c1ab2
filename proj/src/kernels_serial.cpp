#include "safevsc/neural/kernels.hpp"

namespace safevsc::neural::serial {

void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu) {
  const std::size_t nb = s.batch;
  for (std::size_t o = 0; o < s.out; ++o) {
    double* yo = y.data() + o * nb;
    for (std::size_t j = 0; j < nb; ++j) yo[j] = b[o];
    for (std::size_t i = 0; i < s.in; ++i) {
      const double wi = w[o * s.in + i];
      const double* xi = x.data() + i * nb;
      for (std::size_t j = 0; j < nb; ++j) yo[j] += wi * xi[j];
    }
    if (relu)
      for (std::size_t j = 0; j < nb; ++j) yo[j] = yo[j] > 0.0 ? yo[j] : 0.0;
  }
}

void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx) {
  const std::size_t nb = s.batch;
  for (std::size_t i = 0; i < s.in; ++i) {
    double* dxi = dx.data() + i * nb;
    for (std::size_t j = 0; j < nb; ++j) dxi[j] = 0.0;
    for (std::size_t o = 0; o < s.out; ++o) {
      const double wo = w[o * s.in + i];
      const double* dyo = dy.data() + o * nb;
      for (std::size_t j = 0; j < nb; ++j) dxi[j] += wo * dyo[j];
    }
  }
}

void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db) {
  const std::size_t nb = s.batch;
  for (std::size_t o = 0; o < s.out; ++o) {
    const double* dyo = dy.data() + o * nb;
    double acc_b = 0.0;
    for (std::size_t j = 0; j < nb; ++j) acc_b += dyo[j];
    db[o] = acc_b;
    for (std::size_t i = 0; i < s.in; ++i) {
      const double* xi = x.data() + i * nb;
      double acc = 0.0;
      for (std::size_t j = 0; j < nb; ++j) acc += dyo[j] * xi[j];
      dw[o * s.in + i] = acc;
    }
  }
}

}  // namespace safevsc::neural::serial
