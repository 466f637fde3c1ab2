#include "safevsc/neural/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "safevsc/rng.hpp"

namespace safevsc::neural {

std::vector<std::size_t> QNetworkParams::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers.empty()) return sizes;
  sizes.push_back(layers.front().in);
  for (const auto& l : layers) sizes.push_back(l.out);
  return sizes;
}

std::size_t QNetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

bool QNetworkParams::all_finite() const {
  for (const auto& l : layers) {
    for (double x : l.w)
      if (!std::isfinite(x)) return false;
    for (double x : l.b)
      if (!std::isfinite(x)) return false;
  }
  return true;
}

QNetworkParams QNetworkParams::zeros_like() const {
  QNetworkParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) z.layers.push_back({l.in, l.out, std::vector<double>(l.w.size()), std::vector<double>(l.b.size())});
  return z;
}

QNetworkParams init_network(std::span<const std::size_t> sizes, std::uint64_t seed) {
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least an input and an output size");
  for (std::size_t s : sizes)
    if (s == 0) throw std::invalid_argument("layer sizes must be positive");
  Rng rng(seed);
  QNetworkParams p;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    DenseLayer l{sizes[k], sizes[k + 1], std::vector<double>(sizes[k] * sizes[k + 1]), std::vector<double>(sizes[k + 1], 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (double& w : l.w) w = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(l));
  }
  return p;
}

void Workspace::prepare(const QNetworkParams& p, std::size_t batch) {
  const auto sizes = p.layer_sizes();
  if (batch == batch_ && acts_.size() == sizes.size()) {
    bool same = true;
    for (std::size_t k = 0; k < sizes.size(); ++k) same = same && acts_[k].size() == sizes[k] * batch;
    if (same) return;
  }
  batch_ = batch;
  acts_.assign(sizes.size(), {});
  std::size_t widest = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    acts_[k].assign(sizes[k] * batch, 0.0);
    widest = std::max(widest, sizes[k]);
  }
  delta_.assign(widest * batch, 0.0);
  delta_next_.assign(widest * batch, 0.0);
}

namespace {

void check_input(const QNetworkParams& p, std::size_t x_size, std::size_t batch) {
  if (p.layers.empty()) throw std::invalid_argument("network has no layers");
  if (batch == 0) throw std::invalid_argument("batch must be nonempty");
  if (x_size != p.input_size() * batch)
    throw std::invalid_argument("input size " + std::to_string(x_size) + " does not match network input " +
                                std::to_string(p.input_size()) + " x batch " + std::to_string(batch));
}

// Runs the forward pass into ws.activations(), transposing x to feature-major.
void run_forward(const QNetworkParams& p, std::span<const double> x, std::size_t batch, Workspace& ws, Exec exec) {
  check_input(p, x.size(), batch);
  ws.prepare(p, batch);
  auto& acts = ws.activations();
  const std::size_t in = p.input_size();
  for (std::size_t j = 0; j < batch; ++j)
    for (std::size_t i = 0; i < in; ++i) acts[0][i * batch + j] = x[j * in + i];
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    const bool relu = k + 1 < p.layers.size();
    dense_forward(exec, {l.in, l.out, batch}, l.w, l.b, acts[k], acts[k + 1], relu);
  }
}

// Backpropagates ws.delta() (dLoss/d output, feature-major) into grads.
void run_backward(const QNetworkParams& p, Workspace& ws, Gradients& grads, Exec exec) {
  auto& acts = ws.activations();
  const std::size_t batch = ws.batch();
  auto* delta = &ws.delta();
  auto* delta_next = &ws.delta_next();
  for (std::size_t k = p.layers.size(); k-- > 0;) {
    const auto& l = p.layers[k];
    const DenseShape shape{l.in, l.out, batch};
    std::span<const double> dy(delta->data(), l.out * batch);
    dense_backward_params(exec, shape, acts[k], dy, grads.layers[k].w, grads.layers[k].b);
    if (k == 0) break;
    std::span<double> dx(delta_next->data(), l.in * batch);
    dense_backward_input(exec, shape, l.w, dy, dx);
    // ReLU derivative: the layer-k input is the post-activation of layer k-1.
    const auto& a = acts[k];
    for (std::size_t e = 0; e < l.in * batch; ++e)
      if (!(a[e] > 0.0)) dx[e] = 0.0;
    std::swap(delta, delta_next);
  }
}

void ensure_shape(const QNetworkParams& p, Gradients& g) {
  bool ok = g.layers.size() == p.layers.size();
  for (std::size_t k = 0; ok && k < p.layers.size(); ++k)
    ok = g.layers[k].w.size() == p.layers[k].w.size() && g.layers[k].b.size() == p.layers[k].b.size();
  if (!ok) g = p.zeros_like();
}

}  // namespace

std::vector<double> forward(const QNetworkParams& p, std::span<const double> x) {
  Workspace ws;
  auto q = forward_batch(p, x, 1, ws);
  return {q.begin(), q.end()};
}

std::span<const double> forward_batch(const QNetworkParams& p, std::span<const double> x, std::size_t batch,
                                      Workspace& ws, Exec exec) {
  run_forward(p, x, batch, ws, exec);
  return ws.activations().back();
}

double backward_td_packed(const QNetworkParams& p, std::span<const double> x, std::span<const int> actions,
                          std::span<const double> targets, Workspace& ws, Gradients& grads, Exec exec) {
  const std::size_t batch = actions.size();
  if (targets.size() != batch) throw std::invalid_argument("targets and actions differ in length");
  run_forward(p, x, batch, ws, exec);
  ensure_shape(p, grads);
  const auto& q = ws.activations().back();
  const std::size_t n_out = p.output_size();
  auto& delta = ws.delta();
  std::fill(delta.begin(), delta.begin() + static_cast<std::ptrdiff_t>(n_out * batch), 0.0);
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(batch);
  for (std::size_t j = 0; j < batch; ++j) {
    const auto a = static_cast<std::size_t>(actions[j]);
    if (a >= n_out) throw std::out_of_range("TD action index out of range");
    const double residual = q[a * batch + j] - targets[j];
    loss += residual * residual;
    delta[a * batch + j] = scale * residual;
  }
  run_backward(p, ws, grads, exec);
  return loss / static_cast<double>(batch);
}

TdBatchResult backward_td(const QNetworkParams& p, std::span<const TdSample> batch, Exec exec) {
  if (batch.empty()) throw std::invalid_argument("TD batch must be nonempty");
  const std::size_t in = p.input_size();
  std::vector<double> x;
  x.reserve(batch.size() * in);
  std::vector<int> actions;
  std::vector<double> targets;
  for (const auto& s : batch) {
    if (s.x.size() != in) throw std::invalid_argument("TD sample has wrong feature dimension");
    x.insert(x.end(), s.x.begin(), s.x.end());
    actions.push_back(s.action);
    targets.push_back(s.target);
  }
  Workspace ws;
  TdBatchResult r{p.zeros_like(), 0.0};
  r.loss = backward_td_packed(p, x, actions, targets, ws, r.grads, exec);
  return r;
}

double backward_mse(const QNetworkParams& p, std::span<const double> x, std::span<const double> y,
                    std::size_t batch, Workspace& ws, Gradients& grads, Exec exec) {
  run_forward(p, x, batch, ws, exec);
  ensure_shape(p, grads);
  const std::size_t n_out = p.output_size();
  if (y.size() != n_out * batch) throw std::invalid_argument("regression targets have wrong size");
  const auto& out = ws.activations().back();
  auto& delta = ws.delta();
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(batch);
  for (std::size_t j = 0; j < batch; ++j)
    for (std::size_t k = 0; k < n_out; ++k) {
      const double r = out[k * batch + j] - y[j * n_out + k];
      loss += r * r;
      delta[k * batch + j] = scale * r;
    }
  run_backward(p, ws, grads, exec);
  return loss / static_cast<double>(batch);
}

AdamState AdamState::for_network(const QNetworkParams& p, double lr) {
  AdamState st;
  st.lr = lr;
  st.m = p.zeros_like();
  st.v = p.zeros_like();
  return st;
}

namespace {
void adam_update(std::vector<double>& x, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v,
                 const AdamState& st, double c1, double c2) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
    v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    x[i] -= st.lr * m_hat / (std::sqrt(v_hat) + st.eps);
  }
}
}  // namespace

void adam_step(QNetworkParams& p, const Gradients& g, AdamState& st) {
  if (st.m.layers.size() != p.layers.size()) {
    st.m = p.zeros_like();
    st.v = p.zeros_like();
  }
  if (g.layers.size() != p.layers.size()) throw std::invalid_argument("gradient shape mismatch");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    adam_update(p.layers[k].w, g.layers[k].w, st.m.layers[k].w, st.v.layers[k].w, st, c1, c2);
    adam_update(p.layers[k].b, g.layers[k].b, st.m.layers[k].b, st.v.layers[k].b, st, c1, c2);
  }
}

void sgd_step(QNetworkParams& p, const Gradients& g, double lr) {
  if (g.layers.size() != p.layers.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t k = 0; k < p.layers.size(); ++k) {
    for (std::size_t i = 0; i < p.layers[k].w.size(); ++i) p.layers[k].w[i] -= lr * g.layers[k].w[i];
    for (std::size_t i = 0; i < p.layers[k].b.size(); ++i) p.layers[k].b[i] -= lr * g.layers[k].b[i];
  }
}

}  // namespace safevsc::neural
