#include "safevsc/dqn.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace safevsc {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("agent.gamma must be in [0, 1)");
  if (!(eps_start >= 0.0 && eps_start <= 1.0)) throw std::invalid_argument("agent.eps_start must be in [0, 1]");
  if (!(eps_end >= 0.0 && eps_end <= 1.0)) throw std::invalid_argument("agent.eps_end must be in [0, 1]");
  if (eps_decay_episodes < 0) throw std::invalid_argument("agent.eps_decay_episodes must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("agent.batch_size must be positive");
  if (batch_size > replay_capacity) throw std::invalid_argument("agent.batch_size must not exceed replay_capacity");
  if (target_sync_period == 0) throw std::invalid_argument("agent.target_sync_period must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("agent.learning_rate must be positive");
  if (!(reward_scale > 0.0)) throw std::invalid_argument("agent.reward_scale must be positive");
  if (!(current_norm > 0.0)) throw std::invalid_argument("agent.current_norm must be positive");
  for (std::size_t h : hidden_layers)
    if (h == 0) throw std::invalid_argument("agent.hidden_layers entries must be positive");
}

double epsilon_for_episode(const AgentConfig& cfg, int episode) {
  if (cfg.eps_decay_episodes <= 0 || episode >= cfg.eps_decay_episodes) return cfg.eps_end;
  const double frac = static_cast<double>(episode) / static_cast<double>(cfg.eps_decay_episodes);
  return cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;
}

std::size_t feature_dimension(PrevActionEncoding enc) { return enc == PrevActionEncoding::voltage ? 8 : 13; }

std::vector<double> encode_state(const PlantState& ps, AlphaBeta ref, const SwitchAction& prev,
                                 const PlantParams& p, double current_norm, PrevActionEncoding enc) {
  const AlphaBeta dv = ref - ps.v_f;
  std::vector<double> f;
  f.reserve(feature_dimension(enc));
  f.push_back(ref.alpha / p.v_dc);
  f.push_back(ref.beta / p.v_dc);
  f.push_back(dv.alpha / p.v_dc);
  f.push_back(dv.beta / p.v_dc);
  f.push_back(ps.i_f.alpha / current_norm);
  f.push_back(ps.i_f.beta / current_norm);
  if (enc == PrevActionEncoding::voltage) {
    const AlphaBeta v = inverter_voltage(prev, p.v_dc);
    f.push_back(v.alpha / p.v_dc);
    f.push_back(v.beta / p.v_dc);
  } else {
    for (int k = 1; k <= kActionCount; ++k) f.push_back(prev.index == k ? 1.0 : 0.0);
  }
  return f;
}

int greedy_action(std::span<const double> q) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.size(); ++k)
    if (q[k] > q[best]) best = k;
  return static_cast<int>(best) + 1;
}

int select_action(std::span<const double> q, double eps, Rng& rng) {
  if (rng.uniform() < eps) return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(q.size())));
  return greedy_action(q);
}

ReplayMemory::ReplayMemory(std::size_t capacity, std::size_t dim)
    : capacity_(capacity),
      dim_(dim),
      states_(capacity * dim),
      next_states_(capacity * dim),
      actions_(capacity),
      rewards_(capacity),
      dones_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayMemory::push(std::span<const double> s, int a, double r, std::span<const double> s_next, bool done) {
  if (s.size() != dim_ || s_next.size() != dim_) throw std::invalid_argument("transition has wrong feature dimension");
  std::copy(s.begin(), s.end(), states_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
  std::copy(s_next.begin(), s_next.end(), next_states_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
  actions_[head_] = a;
  rewards_[head_] = r;
  dones_[head_] = done ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayMemory::sample(std::size_t n, Rng& rng) const {
  if (n > size_) throw std::invalid_argument("cannot sample more transitions than stored");
  std::vector<std::size_t> out;
  out.reserve(n);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(n * 2);
  for (std::size_t j = size_ - n; j < size_; ++j) {
    std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
    if (!chosen.insert(t).second) {
      t = j;
      chosen.insert(t);
    }
    out.push_back(t);
  }
  return out;
}

Transition ReplayMemory::at(std::size_t logical) const {
  if (logical >= size_) throw std::out_of_range("replay index out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  const std::size_t slot = (oldest + logical) % capacity_;
  const auto s = state(slot);
  const auto sn = next_state(slot);
  return {{s.begin(), s.end()}, actions_[slot], rewards_[slot], {sn.begin(), sn.end()}, dones_[slot] != 0};
}

std::vector<double> td_targets(std::span<const Transition> batch, const neural::QNetworkParams& target,
                               double gamma) {
  if (batch.empty()) throw std::invalid_argument("TD batch must be nonempty");
  const std::size_t dim = target.input_size();
  std::vector<double> x;
  x.reserve(batch.size() * dim);
  for (const auto& t : batch) x.insert(x.end(), t.s_next.begin(), t.s_next.end());
  neural::Workspace ws;
  const auto q = neural::forward_batch(target, x, batch.size(), ws);
  const std::size_t nb = batch.size();
  std::vector<double> y(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    if (batch[j].done) {
      y[j] = batch[j].r;
      continue;
    }
    double best = q[j];
    for (std::size_t k = 1; k < target.output_size(); ++k) best = std::max(best, q[k * nb + j]);
    y[j] = batch[j].r + gamma * best;
  }
  return y;
}

namespace {
std::vector<std::size_t> network_shape(const AgentConfig& cfg, std::size_t dim) {
  std::vector<std::size_t> sizes{dim};
  sizes.insert(sizes.end(), cfg.hidden_layers.begin(), cfg.hidden_layers.end());
  sizes.push_back(kActionCount);
  return sizes;
}
}  // namespace

DqnAgent::DqnAgent(AgentConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      dim_(feature_dimension(cfg_.prev_encoding)),
      replay_(cfg_.replay_capacity, dim_),
      rng_(Rng::derive(seed, 1)) {
  cfg_.validate();
  online_ = neural::init_network(network_shape(cfg_, dim_), Rng::derive(seed, 0));
  target_ = online_;
  adam_ = neural::AdamState::for_network(online_, cfg_.learning_rate);
  grads_ = online_.zeros_like();
}

void DqnAgent::set_online(neural::QNetworkParams p) {
  if (p.layer_sizes() != online_.layer_sizes()) throw std::invalid_argument("network shape does not match agent config");
  online_ = std::move(p);
  target_ = online_;
  adam_ = neural::AdamState::for_network(online_, cfg_.learning_rate);
}

std::span<const double> DqnAgent::q_values(std::span<const double> features) {
  return neural::forward_batch(online_, features, 1, act_ws_, neural::Exec::serial);
}

int DqnAgent::act(std::span<const double> features, double eps) { return select_action(q_values(features), eps, rng_); }

void DqnAgent::remember(std::span<const double> s, int a, double r, std::span<const double> s_next, bool done) {
  replay_.push(s, a, r * cfg_.reward_scale, s_next, done);
}

LearnResult DqnAgent::learn_step() {
  const std::size_t nb = cfg_.batch_size;
  if (replay_.size() < std::max(nb, cfg_.learn_start)) return {};
  const auto slots = replay_.sample(nb, rng_);
  batch_x_.resize(nb * dim_);
  batch_x_next_.resize(nb * dim_);
  batch_a_.resize(nb);
  batch_y_.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const auto s = replay_.state(slots[j]);
    const auto sn = replay_.next_state(slots[j]);
    std::copy(s.begin(), s.end(), batch_x_.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    std::copy(sn.begin(), sn.end(), batch_x_next_.begin() + static_cast<std::ptrdiff_t>(j * dim_));
    batch_a_[j] = replay_.action(slots[j]) - 1;
  }
  const auto q_next = neural::forward_batch(target_, batch_x_next_, nb, target_ws_, cfg_.exec);
  for (std::size_t j = 0; j < nb; ++j) {
    const double r = replay_.reward_at(slots[j]);
    if (replay_.done(slots[j])) {
      batch_y_[j] = r;
      continue;
    }
    double best = q_next[j];
    for (std::size_t k = 1; k < static_cast<std::size_t>(kActionCount); ++k) best = std::max(best, q_next[k * nb + j]);
    batch_y_[j] = r + cfg_.gamma * best;
  }
  LearnResult res;
  res.performed = true;
  res.loss = neural::backward_td_packed(online_, batch_x_, batch_a_, batch_y_, train_ws_, grads_, cfg_.exec);
  if (cfg_.optimizer == Optimizer::adam)
    neural::adam_step(online_, grads_, adam_);
  else
    neural::sgd_step(online_, grads_, cfg_.learning_rate);
  ++learn_steps_;
  if (learn_steps_ % cfg_.target_sync_period == 0) {
    target_ = online_;
    ++target_syncs_;
  }
  return res;
}

}  // namespace safevsc
