#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safevsc/neural/network.hpp"
#include "safevsc/plant.hpp"
#include "safevsc/rng.hpp"

namespace safevsc {

enum class PrevActionEncoding { voltage, one_hot };
enum class Optimizer { adam, sgd };

struct AgentConfig {
  double gamma = 0.95;
  double eps_start = 1.0;
  double eps_end = 0.02;
  int eps_decay_episodes = 50;
  std::size_t replay_capacity = 100'000;
  std::size_t batch_size = 64;
  std::uint64_t target_sync_period = 500;  // learn steps
  std::size_t learn_start = 1000;          // transitions
  std::vector<std::size_t> hidden_layers{64, 64};
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-3;
  // Multiplies the tracking reward before it enters TD targets; the logged
  // reward is always unscaled.
  double reward_scale = 2.5e-5;
  PrevActionEncoding prev_encoding = PrevActionEncoding::voltage;
  double current_norm = 20.0;  // feature normalization for currents
  neural::Exec exec = neural::Exec::parallel;

  void validate() const;
};

/// Exploration probability for a zero-based episode index: linear decay from
/// eps_start to eps_end over eps_decay_episodes, then flat.
double epsilon_for_episode(const AgentConfig& cfg, int episode);

std::size_t feature_dimension(PrevActionEncoding enc);

/// [v*_a, v*_b, dv_a, dv_b, i_a, i_b, prev...] with dv = v* - v_f. Voltages are
/// divided by v_dc and currents by current_norm. The previous action is its
/// inverter voltage / v_dc, or a 7-way one-hot.
std::vector<double> encode_state(const PlantState& ps, AlphaBeta ref, const SwitchAction& prev,
                                 const PlantParams& p, double current_norm = 20.0,
                                 PrevActionEncoding enc = PrevActionEncoding::voltage);

/// -|v* - v_f|^2
inline double reward(AlphaBeta ref, AlphaBeta v_f) { return -(ref - v_f).squared_norm(); }

/// Greedy with probability 1 - eps (lowest index on ties), otherwise uniform
/// over 1..7. Returns a one-based action index.
int select_action(std::span<const double> q, double eps, Rng& rng);

/// Lowest-index argmax, one-based.
int greedy_action(std::span<const double> q);

struct Transition {
  std::vector<double> s;
  int a = 0;  // one-based
  double r = 0.0;
  std::vector<double> s_next;
  bool done = false;
};

/// Fixed-capacity ring buffer, oldest entries overwritten first.
class ReplayMemory {
 public:
  ReplayMemory(std::size_t capacity, std::size_t dim);

  void push(std::span<const double> s, int a, double r, std::span<const double> s_next, bool done);
  void push(const Transition& t) { push(t.s, t.a, t.r, t.s_next, t.done); }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }

  /// Distinct indices, chosen uniformly (Floyd's algorithm).
  std::vector<std::size_t> sample(std::size_t n, Rng& rng) const;

  /// Logical index 0 is the oldest transition still stored.
  Transition at(std::size_t logical) const;

  std::span<const double> state(std::size_t slot) const { return {states_.data() + slot * dim_, dim_}; }
  std::span<const double> next_state(std::size_t slot) const { return {next_states_.data() + slot * dim_, dim_}; }
  int action(std::size_t slot) const { return actions_[slot]; }
  double reward_at(std::size_t slot) const { return rewards_[slot]; }
  bool done(std::size_t slot) const { return dones_[slot] != 0; }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::vector<double> states_;
  std::vector<double> next_states_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> dones_;
};

/// y_j = r_j if done_j else r_j + gamma * max_a' Q_target(s'_j, a').
std::vector<double> td_targets(std::span<const Transition> batch, const neural::QNetworkParams& target, double gamma);

struct LearnResult {
  bool performed = false;
  double loss = 0.0;
};

class DqnAgent {
 public:
  DqnAgent(AgentConfig cfg, std::uint64_t seed);

  const AgentConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return dim_; }

  std::span<const double> q_values(std::span<const double> features);
  int act(std::span<const double> features, double eps);

  /// Stores a transition; `r` is the unscaled tracking reward.
  void remember(std::span<const double> s, int a, double r, std::span<const double> s_next, bool done);

  /// One minibatch update. No-op until the replay holds
  /// max(batch_size, learn_start) transitions.
  LearnResult learn_step();

  const neural::QNetworkParams& online() const { return online_; }
  const neural::QNetworkParams& target() const { return target_; }
  void set_online(neural::QNetworkParams p);  // also syncs the target
  const ReplayMemory& replay() const { return replay_; }
  std::uint64_t learn_steps() const { return learn_steps_; }
  std::uint64_t target_syncs() const { return target_syncs_; }
  Rng& rng() { return rng_; }

 private:
  AgentConfig cfg_;
  std::size_t dim_;
  neural::QNetworkParams online_;
  neural::QNetworkParams target_;
  neural::AdamState adam_;
  neural::Gradients grads_;
  ReplayMemory replay_;
  Rng rng_;
  std::uint64_t learn_steps_ = 0;
  std::uint64_t target_syncs_ = 0;

  neural::Workspace act_ws_;
  neural::Workspace train_ws_;
  neural::Workspace target_ws_;
  std::vector<double> batch_x_;
  std::vector<double> batch_x_next_;
  std::vector<int> batch_a_;
  std::vector<double> batch_y_;
};

}  // namespace safevsc
