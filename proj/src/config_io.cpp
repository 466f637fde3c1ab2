#include "safevsc/config_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "safevsc/neural/checkpoint.hpp"

namespace safevsc {

using nlohmann::json;

namespace {

// Reads known keys from one JSON object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config key '" + display() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + child(key) + "' has the wrong type");
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string s;
    bool present = j_.contains(key);
    read(key, s);
    if (!present) return;
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + child(key) + "': " + e.what());
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + child(k.c_str()) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json params_json(const PlantParams& p) {
  return {{"v_dc", p.v_dc}, {"l_f", p.l_f}, {"r_f", p.r_f}, {"c_f", p.c_f}, {"r_load", p.r_load}, {"t_s", p.t_s}};
}

void read_params(ObjectReader& r, PlantParams& p) {
  r.read("v_dc", p.v_dc);
  r.read("l_f", p.l_f);
  r.read("r_f", p.r_f);
  r.read("c_f", p.c_f);
  r.read("r_load", p.r_load);
  r.read("t_s", p.t_s);
}

std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }
Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}
std::string_view to_string(PrevActionEncoding e) { return e == PrevActionEncoding::voltage ? "voltage" : "one_hot"; }
PrevActionEncoding encoding_from_string(const std::string& s) {
  if (s == "voltage") return PrevActionEncoding::voltage;
  if (s == "one_hot") return PrevActionEncoding::one_hot;
  throw std::invalid_argument("unknown previous-action encoding '" + s + "'");
}

json agent_json(const AgentConfig& a) {
  return {
      {"gamma", a.gamma},
      {"eps_start", a.eps_start},
      {"eps_end", a.eps_end},
      {"eps_decay_episodes", a.eps_decay_episodes},
      {"replay_capacity", a.replay_capacity},
      {"batch_size", a.batch_size},
      {"target_sync_period", a.target_sync_period},
      {"learn_start", a.learn_start},
      {"hidden_layers", a.hidden_layers},
      {"optimizer", to_string(a.optimizer)},
      {"learning_rate", a.learning_rate},
      {"reward_scale", a.reward_scale},
      {"prev_encoding", to_string(a.prev_encoding)},
      {"current_norm", a.current_norm},
  };
}

void read_agent(const json& j, const std::string& path, AgentConfig& a) {
  ObjectReader r(j, path);
  r.read("gamma", a.gamma);
  r.read("eps_start", a.eps_start);
  r.read("eps_end", a.eps_end);
  r.read("eps_decay_episodes", a.eps_decay_episodes);
  r.read("replay_capacity", a.replay_capacity);
  r.read("batch_size", a.batch_size);
  r.read("target_sync_period", a.target_sync_period);
  r.read("learn_start", a.learn_start);
  r.read("hidden_layers", a.hidden_layers);
  r.read_enum("optimizer", a.optimizer, optimizer_from_string);
  r.read("learning_rate", a.learning_rate);
  r.read("reward_scale", a.reward_scale);
  r.read_enum("prev_encoding", a.prev_encoding, encoding_from_string);
  r.read("current_norm", a.current_norm);
  r.finish();
}

Scheme parse_scheme(const std::string& s) { return scheme_from_string(s); }
ControllerKind parse_controller(const std::string& s) { return controller_from_string(s); }

}  // namespace

json to_json(const RunConfig& c) {
  json plant = params_json(c.plant);
  plant["scheme"] = to_string(c.plant_scheme);
  return {
      {"seed", c.seed},
      {"controller", to_string(c.controller)},
      {"episodes", c.episodes},
      {"steps_per_episode", c.steps_per_episode},
      {"randomize_phase", c.randomize_phase},
      {"plant", plant},
      {"believed", params_json(c.believed)},
      {"reference", {{"amplitude", c.reference.amplitude}, {"frequency", c.reference.frequency}, {"phase0", c.reference.phase0}}},
      {"agent", agent_json(c.agent)},
      {"shield",
       {{"i_max", c.shield.i_max},
        {"i_hw_limit", c.shield.i_hw_limit},
        {"prediction_scheme", to_string(c.shield.prediction_scheme)},
        {"enabled", c.shield.enabled}}},
      {"mpc", {{"i_max", c.mpc.i_max}, {"prediction_scheme", to_string(c.mpc.prediction_scheme)}, {"lambda_d", c.mpc.lambda_d}}},
      {"eval",
       {{"warmup_periods", c.eval.warmup_periods},
        {"periods", c.eval.periods},
        {"max_harmonic", c.eval.max_harmonic},
        {"protocol_episodes", c.eval.protocol_episodes},
        {"phase0", c.eval.phase0}}},
  };
}

RunConfig apply_config(const RunConfig& base, const json& doc) {
  RunConfig c = base;
  ObjectReader root(doc, "");
  root.read("seed", c.seed);
  root.read_enum("controller", c.controller, parse_controller);
  root.read("episodes", c.episodes);
  root.read("steps_per_episode", c.steps_per_episode);
  root.read("randomize_phase", c.randomize_phase);
  if (root.has("plant")) {
    ObjectReader r(root.at("plant"), "plant");
    read_params(r, c.plant);
    r.read_enum("scheme", c.plant_scheme, parse_scheme);
    r.finish();
    // An unspecified belief tracks the plant when the base was matched.
    if (!root.has("believed") && base.believed == base.plant) c.believed = c.plant;
  }
  if (root.has("believed")) {
    ObjectReader r(root.at("believed"), "believed");
    read_params(r, c.believed);
    r.finish();
  }
  if (root.has("reference")) {
    ObjectReader r(root.at("reference"), "reference");
    r.read("amplitude", c.reference.amplitude);
    r.read("frequency", c.reference.frequency);
    r.read("phase0", c.reference.phase0);
    r.finish();
  }
  if (root.has("agent")) read_agent(root.at("agent"), "agent", c.agent);
  if (root.has("shield")) {
    ObjectReader r(root.at("shield"), "shield");
    r.read("i_max", c.shield.i_max);
    r.read("i_hw_limit", c.shield.i_hw_limit);
    r.read_enum("prediction_scheme", c.shield.prediction_scheme, parse_scheme);
    r.read("enabled", c.shield.enabled);
    r.finish();
  }
  if (root.has("mpc")) {
    ObjectReader r(root.at("mpc"), "mpc");
    r.read("i_max", c.mpc.i_max);
    r.read_enum("prediction_scheme", c.mpc.prediction_scheme, parse_scheme);
    r.read("lambda_d", c.mpc.lambda_d);
    r.finish();
  }
  if (root.has("eval")) {
    ObjectReader r(root.at("eval"), "eval");
    r.read("warmup_periods", c.eval.warmup_periods);
    r.read("periods", c.eval.periods);
    r.read("max_harmonic", c.eval.max_harmonic);
    r.read("protocol_episodes", c.eval.protocol_episodes);
    r.read("phase0", c.eval.phase0);
    r.finish();
  }
  root.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return apply_config(base, doc);
}

namespace {

json summary_json(const EpisodeSummary& e) {
  return {{"index", e.index},
          {"phase0", e.phase0},
          {"epsilon", e.epsilon},
          {"accumulated_reward", e.accumulated_reward},
          {"max_current", e.max_current},
          {"interventions", e.interventions},
          {"violations_imax", e.violations_imax},
          {"violations_imax_safe_exists", e.violations_imax_safe_exists},
          {"violations_hw", e.violations_hw},
          {"no_safe_steps", e.no_safe_steps},
          {"learn_updates", e.learn_updates},
          {"mean_loss", e.mean_loss}};
}

EpisodeSummary summary_from(const json& j) {
  EpisodeSummary e;
  e.index = j.at("index").get<int>();
  e.phase0 = j.at("phase0").get<double>();
  e.epsilon = j.at("epsilon").get<double>();
  e.accumulated_reward = j.at("accumulated_reward").get<double>();
  e.max_current = j.at("max_current").get<double>();
  e.interventions = j.at("interventions").get<int>();
  e.violations_imax = j.at("violations_imax").get<int>();
  e.violations_imax_safe_exists = j.at("violations_imax_safe_exists").get<int>();
  e.violations_hw = j.at("violations_hw").get<int>();
  e.no_safe_steps = j.at("no_safe_steps").get<int>();
  e.learn_updates = j.at("learn_updates").get<int>();
  e.mean_loss = j.at("mean_loss").get<double>();
  return e;
}

}  // namespace

json to_json(const RunReport& r) {
  json episodes = json::array();
  for (const auto& e : r.episodes) episodes.push_back(summary_json(e));
  json out = {{"format", "safevsc-run-report"}, {"version", 1},         {"controller", r.controller},
              {"seed", r.seed},                 {"config", r.config},   {"episodes", episodes},
              {"moving_average", r.moving_average}};
  if (r.evaluation) {
    const auto& m = *r.evaluation;
    // Unbounded distortion has no JSON number; it is stored as null.
    out["evaluation"] = {{"thd", std::isfinite(m.thd) ? json(m.thd) : json(nullptr)},
                         {"fundamental", m.fundamental},
                         {"rms_error", m.rms_error},
                         {"max_current", m.max_current},
                         {"interventions", m.interventions},
                         {"harmonics", m.harmonics},
                         {"protocol_rewards", m.protocol_rewards},
                         {"protocol_mean_reward", m.protocol_mean_reward},
                         {"waveform_a", m.waveform_a},
                         {"waveform_b", m.waveform_b},
                         {"waveform_c", m.waveform_c},
                         {"waveform_ref_a", m.waveform_ref_a}};
  } else {
    out["evaluation"] = nullptr;
  }
  return out;
}

RunReport report_from_json(const json& j) {
  if (j.value("format", "") != "safevsc-run-report") throw std::invalid_argument("not a run report");
  RunReport r;
  r.controller = j.at("controller").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config = j.at("config");
  for (const auto& e : j.at("episodes")) r.episodes.push_back(summary_from(e));
  r.moving_average = j.at("moving_average").get<std::vector<double>>();
  const auto& ev = j.at("evaluation");
  if (!ev.is_null()) {
    EvaluationMetrics m;
    m.thd = ev.at("thd").is_null() ? std::numeric_limits<double>::infinity() : ev.at("thd").get<double>();
    m.fundamental = ev.at("fundamental").get<double>();
    m.rms_error = ev.at("rms_error").get<double>();
    m.max_current = ev.at("max_current").get<double>();
    m.interventions = ev.at("interventions").get<int>();
    m.harmonics = ev.at("harmonics").get<std::vector<double>>();
    m.protocol_rewards = ev.at("protocol_rewards").get<std::vector<double>>();
    m.protocol_mean_reward = ev.at("protocol_mean_reward").get<double>();
    m.waveform_a = ev.at("waveform_a").get<std::vector<double>>();
    m.waveform_b = ev.at("waveform_b").get<std::vector<double>>();
    m.waveform_c = ev.at("waveform_c").get<std::vector<double>>();
    m.waveform_ref_a = ev.at("waveform_ref_a").get<std::vector<double>>();
    r.evaluation = std::move(m);
  }
  return r;
}

std::string dump_report(const RunReport& r) { return to_json(r).dump(1) + "\n"; }

json agent_meta(const DqnAgent& agent, std::uint64_t seed) {
  return {{"agent", agent_json(agent.config())},
          {"seed", seed},
          {"learn_steps", agent.learn_steps()},
          {"target_syncs", agent.target_syncs()},
          {"replay_size", agent.replay().size()}};
}

void save_agent(const std::filesystem::path& checkpoint, const DqnAgent& agent, const RunConfig& cfg) {
  const json meta = agent_meta(agent, cfg.seed);
  neural::save_checkpoint(checkpoint, agent.online(), meta);
  std::filesystem::path sidecar = checkpoint;
  sidecar.replace_extension(".json");
  std::ofstream f(sidecar, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + sidecar.string());
  f << meta.dump(2) << "\n";
}

DqnAgent load_agent(const std::filesystem::path& checkpoint, const RunConfig& cfg) {
  auto ck = neural::load_checkpoint(checkpoint);
  AgentConfig a = cfg.agent;
  if (ck.meta.contains("agent")) {
    try {
      read_agent(ck.meta.at("agent"), "checkpoint.agent", a);
    } catch (const ConfigError& e) {
      throw neural::CheckpointError(std::string("checkpoint version mismatch: ") + e.what());
    }
  }
  DqnAgent agent(a, cfg.seed);
  try {
    agent.set_online(std::move(ck.params));
  } catch (const std::invalid_argument& e) {
    throw neural::CheckpointError(std::string("checkpoint does not match agent config: ") + e.what());
  }
  return agent;
}

}  // namespace safevsc
