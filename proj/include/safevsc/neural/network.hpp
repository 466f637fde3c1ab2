#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "safevsc/neural/kernels.hpp"

namespace safevsc::neural {

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;  // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward ReLU network with a linear output layer.
struct QNetworkParams {
  std::vector<DenseLayer> layers;

  std::vector<std::size_t> layer_sizes() const;
  std::size_t input_size() const { return layers.front().in; }
  std::size_t output_size() const { return layers.back().out; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Same shape, all zeros.
  QNetworkParams zeros_like() const;

  friend bool operator==(const QNetworkParams&, const QNetworkParams&) = default;
};

using Gradients = QNetworkParams;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
/// Throws std::invalid_argument for fewer than two sizes or a zero size.
QNetworkParams init_network(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

inline QNetworkParams init_network(std::initializer_list<std::size_t> sizes, std::uint64_t seed) {
  return init_network(std::span<const std::size_t>(sizes.begin(), sizes.size()), seed);
}

/// Scratch buffers for batched passes; reused across calls to avoid allocation.
class Workspace {
 public:
  void prepare(const QNetworkParams& p, std::size_t batch);

  std::size_t batch() const { return batch_; }
  std::vector<std::vector<double>>& activations() { return acts_; }
  std::vector<double>& delta() { return delta_; }
  std::vector<double>& delta_next() { return delta_next_; }

 private:
  std::size_t batch_ = 0;
  std::vector<std::vector<double>> acts_;  // acts_[0] is the input, acts_[L] the output
  std::vector<double> delta_;
  std::vector<double> delta_next_;
};

/// Single-sample forward pass. Throws std::invalid_argument on size mismatch.
std::vector<double> forward(const QNetworkParams& p, std::span<const double> x);

/// Batched forward pass. `x` is sample-major (batch x in); the result is
/// feature-major (out x batch) and points into the workspace.
std::span<const double> forward_batch(const QNetworkParams& p, std::span<const double> x, std::size_t batch,
                                      Workspace& ws, Exec exec = Exec::serial);

struct TdSample {
  std::span<const double> x;
  int action = 0;  // zero-based output index
  double target = 0.0;
};

struct TdBatchResult {
  Gradients grads;
  double loss = 0.0;  // mean squared TD error
};

/// Gradient of mean_j (y_j - Q(x_j)[a_j])^2 with respect to all parameters.
TdBatchResult backward_td(const QNetworkParams& p, std::span<const TdSample> batch, Exec exec = Exec::serial);

/// Same as backward_td with packed inputs (sample-major x, zero-based actions).
/// Writes into `grads`, which must already have the network's shape.
double backward_td_packed(const QNetworkParams& p, std::span<const double> x, std::span<const int> actions,
                          std::span<const double> targets, Workspace& ws, Gradients& grads,
                          Exec exec = Exec::serial);

/// Gradient of mean_j sum_k (y_jk - f(x_j)_k)^2 for plain regression.
double backward_mse(const QNetworkParams& p, std::span<const double> x, std::span<const double> y,
                    std::size_t batch, Workspace& ws, Gradients& grads, Exec exec = Exec::serial);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  Gradients m;
  Gradients v;

  static AdamState for_network(const QNetworkParams& p, double lr = 1e-3);
};

void adam_step(QNetworkParams& p, const Gradients& g, AdamState& st);

void sgd_step(QNetworkParams& p, const Gradients& g, double lr);

}  // namespace safevsc::neural
