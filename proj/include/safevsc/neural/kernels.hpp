#pragma once

#include <cstddef>
#include <span>

namespace safevsc::neural {

// Dense-layer kernels on feature-major batches: element (feature f, sample j)
// lives at [f * batch + j]. Weights are row-major (out x in).
//
// Every output element is accumulated in the same order by both variants, so
// the parallel kernels are bit-identical to the serial reference for any
// thread count.

enum class Exec { serial, parallel };

struct DenseShape {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t batch = 0;
};

namespace serial {
void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu);
void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx);
void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db);
}  // namespace serial

namespace parallel {
void dense_forward(DenseShape s, std::span<const double> w, std::span<const double> b, std::span<const double> x,
                   std::span<double> y, bool relu);
void dense_backward_input(DenseShape s, std::span<const double> w, std::span<const double> dy,
                          std::span<double> dx);
void dense_backward_params(DenseShape s, std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db);
}  // namespace parallel

inline void dense_forward(Exec e, DenseShape s, std::span<const double> w, std::span<const double> b,
                          std::span<const double> x, std::span<double> y, bool relu) {
  e == Exec::serial ? serial::dense_forward(s, w, b, x, y, relu) : parallel::dense_forward(s, w, b, x, y, relu);
}
inline void dense_backward_input(Exec e, DenseShape s, std::span<const double> w, std::span<const double> dy,
                                 std::span<double> dx) {
  e == Exec::serial ? serial::dense_backward_input(s, w, dy, dx) : parallel::dense_backward_input(s, w, dy, dx);
}
inline void dense_backward_params(Exec e, DenseShape s, std::span<const double> x, std::span<const double> dy,
                                  std::span<double> dw, std::span<double> db) {
  e == Exec::serial ? serial::dense_backward_params(s, x, dy, dw, db)
                    : parallel::dense_backward_params(s, x, dy, dw, db);
}

}  // namespace safevsc::neural
