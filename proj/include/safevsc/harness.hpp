#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safevsc/analysis.hpp"
#include "safevsc/dqn.hpp"
#include "safevsc/mpc.hpp"
#include "safevsc/plant.hpp"
#include "safevsc/shield.hpp"
#include "safevsc/signals.hpp"

namespace safevsc {

enum class ControllerKind { fcs_mpc, dqn, safe_dqn };

std::string_view to_string(ControllerKind k);
ControllerKind controller_from_string(std::string_view s);

struct EvalConfig {
  int warmup_periods = 2;
  int periods = 10;
  int max_harmonic = 500;
  int protocol_episodes = 10;  // greedy episodes used to compare controllers' rewards
  double phase0 = 0.0;         // reference phase of the steady-state run
};

struct RunConfig {
  PlantParams plant{};     // truth
  PlantParams believed{};  // shield and MPC model
  Scheme plant_scheme = Scheme::exact_zoh;
  ReferenceSpec reference{};
  AgentConfig agent{};
  ShieldConfig shield{};  // model_params is replaced by `believed`
  MpcConfig mpc{};        // model_params is replaced by `believed`
  int episodes = 150;
  int steps_per_episode = 1000;
  ControllerKind controller = ControllerKind::safe_dqn;
  std::uint64_t seed = 1;
  bool randomize_phase = true;
  EvalConfig eval{};

  /// Shield settings with the believed model; disabled unless the controller is safe_dqn.
  ShieldConfig shield_config() const;
  MpcConfig mpc_config() const;
  int samples_per_period() const;
  void validate() const;
};

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepRecord {
  double t = 0.0;    // time at the end of the step
  AlphaBeta ref;     // reference at t
  PlantState state;  // plant state at t
  int proposed = 0;
  int executed = 0;
  bool intervened = false;
  bool no_safe_action = false;
  double reward = 0.0;
  double i_norm = 0.0;
};

struct EpisodeLog {
  int index = 0;
  double phase0 = 0.0;
  double epsilon = 0.0;
  std::vector<StepRecord> steps;
  double accumulated_reward = 0.0;
  double max_current = 0.0;
  int violations_imax = 0;            // steps with |i_f| > i_max
  int violations_imax_safe_exists = 0;  // ...among steps where a safe action existed
  int violations_hw = 0;              // steps with |i_f| > i_hw_limit
  int interventions = 0;
  int no_safe_steps = 0;
  int learn_updates = 0;
  double mean_loss = 0.0;
};

struct EpisodeOptions {
  bool learn = true;
  double epsilon = 0.0;
  double phase0 = 0.0;
  int steps = 0;  // 0 means cfg.steps_per_episode
  bool keep_steps = true;
};

/// Closed-loop episode from a zeroed plant. `agent` may be null only for
/// fcs_mpc. Throws SimulationDiverged on a non-finite state.
EpisodeLog run_episode(const RunConfig& cfg, DqnAgent* agent, int episode, const EpisodeOptions& opts);

struct EpisodeSummary {
  int index = 0;
  double phase0 = 0.0;
  double epsilon = 0.0;
  double accumulated_reward = 0.0;
  double max_current = 0.0;
  int interventions = 0;
  int violations_imax = 0;
  int violations_imax_safe_exists = 0;
  int violations_hw = 0;
  int no_safe_steps = 0;
  int learn_updates = 0;
  double mean_loss = 0.0;

  static EpisodeSummary from(const EpisodeLog& log);
  friend bool operator==(const EpisodeSummary&, const EpisodeSummary&) = default;
};

struct EvaluationMetrics {
  double thd = 0.0;
  double fundamental = 0.0;
  double rms_error = 0.0;
  double max_current = 0.0;
  int interventions = 0;
  std::vector<double> harmonics;           // orders 2..max_harmonic
  std::vector<double> protocol_rewards;    // per greedy protocol episode
  double protocol_mean_reward = 0.0;
  std::vector<double> waveform_a, waveform_b, waveform_c;  // last two periods, phase voltages
  std::vector<double> waveform_ref_a;

  friend bool operator==(const EvaluationMetrics&, const EvaluationMetrics&) = default;
};

struct RunReport {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string controller;
  std::vector<EpisodeSummary> episodes;
  std::vector<double> moving_average;
  std::optional<EvaluationMetrics> evaluation;

  double mean_reward(std::size_t first, std::size_t count) const;
  double final_mean_reward(std::size_t last_n = 10) const;
  double max_current() const;
  int total_violations_hw() const;
  int total_violations_imax() const;
  int total_violations_imax_safe_exists() const;
  double mean_episode_max_current() const;

  friend bool operator==(const RunReport&, const RunReport&);
};

struct SteadyStateTrace {
  std::vector<double> t;
  std::vector<AlphaBeta> v_f, ref, i_f;
  std::vector<int> action;
  std::vector<char> intervened;
};

struct Evaluation {
  EvaluationMetrics metrics;
  SteadyStateTrace trace;  // measured window only, warm-up excluded
  std::vector<EpisodeSummary> protocol;
};

/// Greedy (eps = 0), no learning, shield active for safe_dqn: a steady-state
/// run of warmup + periods fundamentals and the protocol episodes.
Evaluation evaluate(const RunConfig& cfg, DqnAgent* agent);

/// Accumulated rewards of cfg.eval.protocol_episodes greedy episodes whose
/// reference phases depend only on the seed, so every controller sees the same ones.
std::vector<double> evaluation_protocol(const RunConfig& cfg, DqnAgent* agent);

struct TrainResult {
  DqnAgent agent;
  RunReport report;
  EpisodeLog last_episode;
};

/// Trains a dqn/safe_dqn agent for cfg.episodes and evaluates it.
TrainResult train(const RunConfig& cfg);

/// Report for a controller that is evaluated without training.
RunReport evaluation_report(const RunConfig& cfg, DqnAgent* agent, Evaluation* out = nullptr);

struct SweepPoint {
  double delta_lf = 0.0;
  double delta_cf = 0.0;
};

struct SweepRow {
  SweepPoint delta;
  RunReport report;
};

/// Trains one run per point with the plant's L_f / C_f scaled by (1 + delta)
/// while the shield and agent keep the nominal believed parameters. Runs are
/// executed in parallel; each one is independent of the thread count.
std::vector<SweepRow> sensitivity_sweep(const RunConfig& cfg, const std::vector<SweepPoint>& points);

/// Points that vary one parameter at a time (the zero point appears once).
std::vector<SweepPoint> axis_grid(const std::vector<double>& deltas_lf, const std::vector<double>& deltas_cf);
std::vector<SweepPoint> joint_grid(const std::vector<double>& deltas);

}  // namespace safevsc
