#include "safevsc/harness.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <exception>
#include <numbers>
#include <sstream>

#include "safevsc/config_io.hpp"

namespace safevsc {

std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::fcs_mpc:
      return "fcs_mpc";
    case ControllerKind::dqn:
      return "dqn";
    case ControllerKind::safe_dqn:
      return "safe_dqn";
  }
  return "?";
}

ControllerKind controller_from_string(std::string_view s) {
  if (s == "fcs_mpc") return ControllerKind::fcs_mpc;
  if (s == "dqn") return ControllerKind::dqn;
  if (s == "safe_dqn") return ControllerKind::safe_dqn;
  throw std::invalid_argument("unknown controller '" + std::string(s) + "' (expected fcs_mpc, dqn or safe_dqn)");
}

ShieldConfig RunConfig::shield_config() const {
  ShieldConfig s = shield;
  s.model_params = believed;
  s.enabled = shield.enabled && controller == ControllerKind::safe_dqn;
  return s;
}

MpcConfig RunConfig::mpc_config() const {
  MpcConfig m = mpc;
  m.model_params = believed;
  m.omega_ref = reference.angular_frequency();
  return m;
}

int RunConfig::samples_per_period() const {
  const double n = 1.0 / (reference.frequency * plant.t_s);
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-6 * r || r < 2)
    throw std::invalid_argument("reference period must be an integer number of sampling periods");
  return static_cast<int>(r);
}

void RunConfig::validate() const {
  plant.validate();
  believed.validate();
  reference.validate();
  agent.validate();
  shield_config().validate();
  mpc_config().validate();
  if (std::abs(plant.t_s - believed.t_s) > 1e-15 * plant.t_s)
    throw std::invalid_argument("plant and believed models must share t_s");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (steps_per_episode < 1) throw std::invalid_argument("steps_per_episode must be >= 1");
  if (eval.warmup_periods < 0 || eval.periods < 2) throw std::invalid_argument("eval needs >= 2 measured periods");
  if (eval.max_harmonic < 2) throw std::invalid_argument("eval.max_harmonic must be >= 2");
  if (eval.protocol_episodes < 1) throw std::invalid_argument("eval.protocol_episodes must be >= 1");
  samples_per_period();
}

namespace {

constexpr std::uint64_t kPhaseStream = 0x1000;
constexpr std::uint64_t kProtocolStream = 0x2000000;

double episode_phase(const RunConfig& cfg, std::uint64_t stream, int episode) {
  if (!cfg.randomize_phase) return cfg.reference.phase0;
  Rng rng(Rng::derive(cfg.seed, stream + static_cast<std::uint64_t>(episode)));
  return rng.uniform(0.0, 2.0 * std::numbers::pi);
}

[[noreturn]] void diverged(int episode, int step, const PlantState& s) {
  std::ostringstream os;
  os.precision(17);
  os << "simulation diverged in episode " << episode << " at step " << step << ": i_f=(" << s.i_f.alpha << ", "
     << s.i_f.beta << ") v_f=(" << s.v_f.alpha << ", " << s.v_f.beta << ")";
  throw SimulationDiverged(os.str());
}

// Prebuilt models shared by every step of one closed-loop run.
struct Loop {
  const RunConfig& cfg;
  DiscreteModel plant_model;
  SafetyShield shield;
  FcsMpc mpc;
  DqnAgent* agent;

  Loop(const RunConfig& c, DqnAgent* a)
      : cfg(c),
        plant_model(discretize(c.plant, c.plant_scheme)),
        shield(c.shield_config()),
        mpc(c.mpc_config()),
        agent(a) {
    if (c.controller != ControllerKind::fcs_mpc && agent == nullptr)
      throw std::invalid_argument("DQN controllers need an agent");
  }

  double t_at(long k) const { return static_cast<double>(k) * cfg.plant.t_s; }

  ReferenceSpec ref_spec(double phase0) const {
    ReferenceSpec r = cfg.reference;
    r.phase0 = phase0;
    return r;
  }

  std::vector<double> features(const PlantState& s, AlphaBeta ref_next, const SwitchAction& prev) const {
    return encode_state(s, ref_next, prev, cfg.plant, cfg.agent.current_norm, cfg.agent.prev_encoding);
  }
};

}  // namespace

EpisodeLog run_episode(const RunConfig& cfg, DqnAgent* agent, int episode, const EpisodeOptions& opts) {
  Loop loop(cfg, agent);
  const int steps = opts.steps > 0 ? opts.steps : cfg.steps_per_episode;
  const ReferenceSpec ref_spec = loop.ref_spec(opts.phase0);
  const ShieldConfig& sh = loop.shield.config();
  const bool is_dqn = cfg.controller != ControllerKind::fcs_mpc;

  EpisodeLog log;
  log.index = episode;
  log.phase0 = opts.phase0;
  log.epsilon = opts.epsilon;
  if (opts.keep_steps) log.steps.reserve(static_cast<std::size_t>(steps));

  PlantState state{};
  SwitchAction prev = make_action(kZeroVectorIndex);
  std::vector<double> s_feat;
  if (is_dqn) s_feat = loop.features(state, reference_at(ref_spec, loop.t_at(1)), prev);
  double loss_sum = 0.0;

  for (int k = 0; k < steps; ++k) {
    const AlphaBeta ref_next = reference_at(ref_spec, loop.t_at(k + 1));
    StepRecord rec;

    SwitchAction executed;
    bool safe_exists = true;
    if (!is_dqn) {
      const MpcDecision d = loop.mpc.select(state, ref_next, prev);
      executed = d.action;
      safe_exists = !d.all_infeasible;
      rec.proposed = executed.index;
      rec.no_safe_action = d.all_infeasible;
    } else {
      const int proposed_idx = agent->act(s_feat, opts.epsilon);
      const SwitchAction proposed = make_action(proposed_idx, prev.gates);
      const ShieldDecision d = loop.shield.filter(state, proposed, ref_next, prev);
      executed = d.executed;
      rec.proposed = proposed_idx;
      rec.intervened = d.intervened;
      rec.no_safe_action = d.no_safe_action;
      safe_exists = !d.no_safe_action;
    }

    const PlantState next = step(state, executed, loop.plant_model, cfg.plant);
    if (!next.finite()) diverged(episode, k, next);
    // Keep time exact rather than accumulated.
    PlantState measured = next;
    measured.t = loop.t_at(k + 1);

    rec.t = measured.t;
    rec.ref = ref_next;
    rec.state = measured;
    rec.executed = executed.index;
    rec.reward = reward(ref_next, measured.v_f);
    rec.i_norm = measured.i_f.norm();

    log.accumulated_reward += rec.reward;
    log.max_current = std::max(log.max_current, rec.i_norm);
    if (rec.i_norm > sh.i_max) {
      ++log.violations_imax;
      if (safe_exists) ++log.violations_imax_safe_exists;
    }
    if (rec.i_norm > sh.i_hw_limit) ++log.violations_hw;
    if (rec.intervened) ++log.interventions;
    if (rec.no_safe_action) ++log.no_safe_steps;

    if (is_dqn) {
      const bool done = k + 1 == steps;
      const AlphaBeta ref_after = reference_at(ref_spec, loop.t_at(k + 2));
      std::vector<double> s_next = loop.features(measured, ref_after, executed);
      if (opts.learn) {
        agent->remember(s_feat, executed.index, rec.reward, s_next, done);
        const LearnResult lr = agent->learn_step();
        if (lr.performed) {
          ++log.learn_updates;
          loss_sum += lr.loss;
          if (!std::isfinite(lr.loss)) diverged(episode, k, measured);
        }
      }
      s_feat = std::move(s_next);
    }

    state = measured;
    prev = executed;
    if (opts.keep_steps) log.steps.push_back(rec);
  }
  if (log.learn_updates > 0) log.mean_loss = loss_sum / log.learn_updates;
  return log;
}

EpisodeSummary EpisodeSummary::from(const EpisodeLog& l) {
  return {l.index,           l.phase0,        l.epsilon,       l.accumulated_reward,
          l.max_current,     l.interventions, l.violations_imax, l.violations_imax_safe_exists,
          l.violations_hw,   l.no_safe_steps, l.learn_updates, l.mean_loss};
}

double RunReport::mean_reward(std::size_t first, std::size_t count) const {
  if (first >= episodes.size() || count == 0) return 0.0;
  const std::size_t last = std::min(episodes.size(), first + count);
  double acc = 0.0;
  for (std::size_t k = first; k < last; ++k) acc += episodes[k].accumulated_reward;
  return acc / static_cast<double>(last - first);
}

double RunReport::final_mean_reward(std::size_t last_n) const {
  const std::size_t n = std::min(last_n, episodes.size());
  return mean_reward(episodes.size() - n, n);
}

double RunReport::max_current() const {
  double m = 0.0;
  for (const auto& e : episodes) m = std::max(m, e.max_current);
  return m;
}

double RunReport::mean_episode_max_current() const {
  if (episodes.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& e : episodes) acc += e.max_current;
  return acc / static_cast<double>(episodes.size());
}

int RunReport::total_violations_hw() const {
  int n = 0;
  for (const auto& e : episodes) n += e.violations_hw;
  return n;
}

int RunReport::total_violations_imax() const {
  int n = 0;
  for (const auto& e : episodes) n += e.violations_imax;
  return n;
}

int RunReport::total_violations_imax_safe_exists() const {
  int n = 0;
  for (const auto& e : episodes) n += e.violations_imax_safe_exists;
  return n;
}

bool operator==(const RunReport& a, const RunReport& b) {
  return a.config == b.config && a.seed == b.seed && a.controller == b.controller && a.episodes == b.episodes &&
         a.moving_average == b.moving_average && a.evaluation == b.evaluation;
}

namespace {
std::vector<EpisodeSummary> protocol_episodes(const RunConfig& cfg, DqnAgent* agent) {
  std::vector<EpisodeSummary> out;
  for (int e = 0; e < cfg.eval.protocol_episodes; ++e) {
    EpisodeOptions opts;
    opts.learn = false;
    opts.epsilon = 0.0;
    opts.phase0 = episode_phase(cfg, kProtocolStream, e);
    opts.keep_steps = false;
    out.push_back(EpisodeSummary::from(run_episode(cfg, agent, e, opts)));
  }
  return out;
}
}  // namespace

std::vector<double> evaluation_protocol(const RunConfig& cfg, DqnAgent* agent) {
  std::vector<double> rewards;
  for (const auto& e : protocol_episodes(cfg, agent)) rewards.push_back(e.accumulated_reward);
  return rewards;
}

Evaluation evaluate(const RunConfig& cfg, DqnAgent* agent) {
  const int per_period = cfg.samples_per_period();
  const int warmup = cfg.eval.warmup_periods * per_period;
  const int measured = cfg.eval.periods * per_period;

  EpisodeOptions opts;
  opts.learn = false;
  opts.epsilon = 0.0;
  opts.phase0 = cfg.eval.phase0;
  opts.steps = warmup + measured;
  const EpisodeLog log = run_episode(cfg, agent, -1, opts);

  Evaluation ev;
  auto& tr = ev.trace;
  std::vector<double> phase_a;
  phase_a.reserve(static_cast<std::size_t>(measured));
  for (auto it = log.steps.begin() + warmup; it != log.steps.end(); ++it) {
    tr.t.push_back(it->t);
    tr.v_f.push_back(it->state.v_f);
    tr.ref.push_back(it->ref);
    tr.i_f.push_back(it->state.i_f);
    tr.action.push_back(it->executed);
    tr.intervened.push_back(it->intervened ? 1 : 0);
    phase_a.push_back(inverse_clarke(it->state.v_f).a);
    ev.metrics.max_current = std::max(ev.metrics.max_current, it->i_norm);
    if (it->intervened) ++ev.metrics.interventions;
  }
  try {
    const ThdResult th = thd({phase_a, 1.0 / cfg.plant.t_s, "vf_a"}, cfg.reference.frequency, cfg.eval.max_harmonic);
    ev.metrics.thd = th.thd;
    ev.metrics.fundamental = th.fundamental;
    ev.metrics.harmonics = th.harmonics;
  } catch (const std::invalid_argument&) {
    // A controller that never builds up the fundamental (e.g. an untrained
    // agent idling on the zero vector) has unbounded distortion.
    const auto periods = static_cast<std::size_t>(cfg.eval.periods);
    ev.metrics.thd = std::numeric_limits<double>::infinity();
    ev.metrics.fundamental = dft_magnitude(phase_a, periods);
    for (int h = 2; h <= cfg.eval.max_harmonic && 2 * h * periods < phase_a.size(); ++h)
      ev.metrics.harmonics.push_back(dft_magnitude(phase_a, h * periods));
  }
  ev.metrics.rms_error = rms_tracking_error(tr.v_f, tr.ref);

  const std::size_t snippet = static_cast<std::size_t>(std::min(2, cfg.eval.periods) * per_period);
  for (std::size_t k = tr.v_f.size() - snippet; k < tr.v_f.size(); ++k) {
    const PhaseValues v = inverse_clarke(tr.v_f[k]);
    ev.metrics.waveform_a.push_back(v.a);
    ev.metrics.waveform_b.push_back(v.b);
    ev.metrics.waveform_c.push_back(v.c);
    ev.metrics.waveform_ref_a.push_back(inverse_clarke(tr.ref[k]).a);
  }

  ev.protocol = protocol_episodes(cfg, agent);
  for (const auto& e : ev.protocol) ev.metrics.protocol_rewards.push_back(e.accumulated_reward);
  ev.metrics.protocol_mean_reward = mean(ev.metrics.protocol_rewards);
  return ev;
}

namespace {
void finish_report(RunReport& r) {
  std::vector<double> rewards;
  for (const auto& e : r.episodes) rewards.push_back(e.accumulated_reward);
  r.moving_average = rewards.empty() ? std::vector<double>{} : moving_average(rewards, 10);
}
}  // namespace

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.controller == ControllerKind::fcs_mpc) throw std::invalid_argument("train needs a dqn or safe_dqn controller");
  TrainResult out{DqnAgent(cfg.agent, cfg.seed), {}, {}};
  out.report.config = to_json(cfg);
  out.report.seed = cfg.seed;
  out.report.controller = std::string(to_string(cfg.controller));
  for (int e = 0; e < cfg.episodes; ++e) {
    EpisodeOptions opts;
    opts.learn = true;
    opts.epsilon = epsilon_for_episode(cfg.agent, e);
    opts.phase0 = episode_phase(cfg, kPhaseStream, e);
    opts.keep_steps = e + 1 == cfg.episodes;
    EpisodeLog log = run_episode(cfg, &out.agent, e, opts);
    out.report.episodes.push_back(EpisodeSummary::from(log));
    if (opts.keep_steps) out.last_episode = std::move(log);
  }
  finish_report(out.report);
  out.report.evaluation = evaluate(cfg, &out.agent).metrics;
  return out;
}

RunReport evaluation_report(const RunConfig& cfg, DqnAgent* agent, Evaluation* out) {
  cfg.validate();
  RunReport r;
  r.config = to_json(cfg);
  r.seed = cfg.seed;
  r.controller = std::string(to_string(cfg.controller));
  Evaluation ev = evaluate(cfg, agent);
  // The protocol episodes double as the report's episode series.
  r.episodes = ev.protocol;
  finish_report(r);
  r.evaluation = ev.metrics;
  if (out) *out = std::move(ev);
  return r;
}

std::vector<SweepRow> sensitivity_sweep(const RunConfig& cfg, const std::vector<SweepPoint>& points) {
  for (const auto& p : points)
    if (!(std::abs(p.delta_lf) <= 0.3 + 1e-12) || !(std::abs(p.delta_cf) <= 0.3 + 1e-12))
      throw std::invalid_argument("sweep deltas must lie within [-0.3, 0.3]");
  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    try {
      RunConfig c = cfg;
      c.plant.l_f = cfg.plant.l_f * (1.0 + points[idx].delta_lf);
      c.plant.c_f = cfg.plant.c_f * (1.0 + points[idx].delta_cf);
      rows[idx] = {points[idx], train(c).report};
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::vector<SweepPoint> axis_grid(const std::vector<double>& deltas_lf, const std::vector<double>& deltas_cf) {
  std::vector<SweepPoint> pts;
  bool have_zero = false;
  for (double d : deltas_lf) {
    pts.push_back({d, 0.0});
    have_zero = have_zero || d == 0.0;
  }
  for (double d : deltas_cf) {
    if (d == 0.0 && have_zero) continue;
    pts.push_back({0.0, d});
  }
  return pts;
}

std::vector<SweepPoint> joint_grid(const std::vector<double>& deltas) {
  std::vector<SweepPoint> pts;
  for (double dl : deltas)
    for (double dc : deltas) pts.push_back({dl, dc});
  return pts;
}

}  // namespace safevsc
