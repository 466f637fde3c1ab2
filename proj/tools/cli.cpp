#include "cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "safevsc/config_io.hpp"
#include "safevsc/harness.hpp"
#include "safevsc/neural/checkpoint.hpp"
#include "safevsc/outputs.hpp"

namespace safevsc::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
};

fs::path output_dir(const Common& c, const char* command) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("SAFEVSC_OUT_DIR"); env && *env) return fs::path(env) / command;
  return fs::path("runs") / command;
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config_file(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.episodes) cfg.episodes = *c.episodes;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

void write_config_echo(const fs::path& dir, const RunConfig& cfg) {
  write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");
}

struct Evaluated {
  RunReport report;
  Evaluation eval;
};

Evaluated evaluate_controller(RunConfig cfg, ControllerKind kind, const std::string& checkpoint) {
  cfg.controller = kind;
  Evaluated out;
  if (kind == ControllerKind::fcs_mpc) {
    out.report = evaluation_report(cfg, nullptr, &out.eval);
    return out;
  }
  if (checkpoint.empty()) throw UsageError(fmt::format("controller {} needs --checkpoint", to_string(kind)));
  DqnAgent agent = load_agent(checkpoint, cfg);
  out.report = evaluation_report(cfg, &agent, &out.eval);
  return out;
}

std::vector<double> parse_deltas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError("cannot parse delta '" + item + "'");
    }
    if (used != item.size()) throw UsageError("cannot parse delta '" + item + "'");
    if (!(std::abs(v) <= 0.3 + 1e-12)) throw UsageError(fmt::format("delta {} is outside [-0.3, 0.3]", item));
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("no deltas given");
  return out;
}

int cmd_train(const Common& c, const std::string& controller, bool no_shield, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (!controller.empty()) cfg.controller = controller_from_string(controller);
  if (no_shield) cfg.controller = ControllerKind::dqn;
  if (cfg.controller == ControllerKind::fcs_mpc) throw UsageError("train needs --controller dqn or safe_dqn");
  if (cfg.episodes < 1) throw UsageError("--episodes must be at least 1");
  const fs::path dir = output_dir(c, "train");
  fs::create_directories(dir);

  TrainResult result = train(cfg);
  save_agent(dir / "agent.bin", result.agent, cfg);
  write_text(dir / "report.json", dump_report(result.report));
  write_text(dir / "trace.csv", trace_csv(result.last_episode));
  write_config_echo(dir, cfg);
  emit_plots(result.report, dir, cfg.shield.i_max);

  const auto& ev = *result.report.evaluation;
  out << fmt::format("controller: {}  seed: {}  episodes: {}\n", result.report.controller, cfg.seed, cfg.episodes);
  out << fmt::format("final-10 mean reward: {:.6g}\n", result.report.final_mean_reward(10));
  out << fmt::format("max |i_f| during training: {:.3f} A  (> i_max steps: {}, > hw limit steps: {})\n",
                     result.report.max_current(), result.report.total_violations_imax(),
                     result.report.total_violations_hw());
  out << fmt::format("THD: {:.2f}%\n", 100.0 * ev.thd);
  out << fmt::format("RMS tracking error: {:.3f} V\n", ev.rms_error);
  out << fmt::format("wrote {}\n", dir.string());
  return 0;
}

int cmd_eval(const Common& c, std::string controller, const std::string& checkpoint, std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (controller.empty()) controller = checkpoint.empty() ? "fcs_mpc" : "safe_dqn";
  const ControllerKind kind = controller_from_string(controller);
  const fs::path dir = output_dir(c, "eval");
  Evaluated e = evaluate_controller(cfg, kind, checkpoint);
  fs::create_directories(dir);
  cfg.controller = kind;
  write_text(dir / "report.json", dump_report(e.report));
  write_text(dir / "waveforms.csv", waveform_csv(e.eval.trace));
  write_text(dir / "spectrum.csv", spectrum_csv(e.eval.metrics, cfg.reference.frequency));
  write_config_echo(dir, cfg);
  emit_plots(e.report, dir, cfg.shield.i_max);
  const auto& m = e.eval.metrics;
  out << fmt::format("controller: {}\n", controller);
  out << fmt::format("THD: {:.2f}%\n", 100.0 * m.thd);
  out << fmt::format("RMS tracking error: {:.3f} V\n", m.rms_error);
  out << fmt::format("max |i_f|: {:.3f} A\n", m.max_current);
  out << fmt::format("protocol mean reward: {:.6g}\n", m.protocol_mean_reward);
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& controllers, const std::string& checkpoint,
                std::ostream& out) {
  RunConfig cfg = resolve(c);
  const fs::path dir = output_dir(c, "compare");
  struct Row {
    std::string name;
    EvaluationMetrics m;
  };
  std::vector<Row> rows;
  for (const auto& name : controllers) {
    const ControllerKind kind = controller_from_string(name);
    rows.push_back({name, *evaluate_controller(cfg, kind, checkpoint).report.evaluation});
  }
  fs::create_directories(dir);
  write_config_echo(dir, cfg);

  std::string csv = "controller,thd_percent,rms_error_v,max_current_a,protocol_mean_reward\n";
  out << fmt::format("{:<10} {:>8} {:>14} {:>12}\n", "controller", "THD [%]", "RMS error [V]", "max |i| [A]");
  for (const auto& r : rows) {
    out << fmt::format("{:<10} {:>8.2f} {:>14.3f} {:>12.3f}\n", r.name, 100.0 * r.m.thd, r.m.rms_error,
                       r.m.max_current);
    csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.name, 100.0 * r.m.thd, r.m.rms_error,
                       r.m.max_current, r.m.protocol_mean_reward);
  }
  write_text(dir / "compare.csv", csv);
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::string& deltas_text, bool joint,
              std::ostream& out) {
  RunConfig cfg = resolve(c);
  if (cfg.controller == ControllerKind::fcs_mpc) cfg.controller = ControllerKind::safe_dqn;
  if (cfg.episodes < 1) throw UsageError("--episodes must be at least 1");
  const std::vector<double> deltas = parse_deltas(deltas_text);
  std::vector<SweepPoint> points;
  if (joint)
    points = joint_grid(deltas);
  else if (param == "lf")
    points = axis_grid(deltas, {});
  else if (param == "cf")
    points = axis_grid({}, deltas);
  else
    points = axis_grid(deltas, deltas);

  const fs::path dir = output_dir(c, "sweep");
  const auto rows = sensitivity_sweep(cfg, points);
  fs::create_directories(dir);
  write_config_echo(dir, cfg);

  std::string csv =
      "delta_lf,delta_cf,max_current_a,mean_episode_max_current_a,violations_imax,violations_hw,final_mean_reward,"
      "thd_percent\n";
  out << fmt::format("{:>8} {:>8} {:>10} {:>12} {:>8} {:>8} {:>14} {:>8}\n", "dL_f", "dC_f", "max|i| A",
                     "mean max A", ">i_max", ">hw", "final reward", "THD %");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const double thd_pct = r.report.evaluation ? 100.0 * r.report.evaluation->thd : 0.0;
    out << fmt::format("{:>8.2f} {:>8.2f} {:>10.3f} {:>12.3f} {:>8} {:>8} {:>14.6g} {:>8.2f}\n", r.delta.delta_lf,
                       r.delta.delta_cf, r.report.max_current(), r.report.mean_episode_max_current(),
                       r.report.total_violations_imax(), r.report.total_violations_hw(),
                       r.report.final_mean_reward(10), thd_pct);
    csv += fmt::format("{:.6g},{:.6g},{:.17g},{:.17g},{},{},{:.17g},{:.17g}\n", r.delta.delta_lf, r.delta.delta_cf,
                       r.report.max_current(), r.report.mean_episode_max_current(), r.report.total_violations_imax(),
                       r.report.total_violations_hw(), r.report.final_mean_reward(10), thd_pct);
    write_text(dir / fmt::format("report_{:02d}.json", k), dump_report(r.report));
  }
  write_text(dir / "sweep.csv", csv);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Safety-shielded DQN and FCS-MPC control of a two-level converter"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file (comments allowed)")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the run seed");
    sub->add_option("--out", common.out, "Output directory (default: $SAFEVSC_OUT_DIR/<command> or runs/<command>)");
  };

  std::string controller;
  bool no_shield = false;
  auto* train_cmd = app.add_subcommand("train", "Train a dqn or safe_dqn agent");
  add_common(train_cmd);
  train_cmd->add_option("--controller", controller, "dqn or safe_dqn")->check(CLI::IsMember({"dqn", "safe_dqn"}));
  train_cmd->add_option("--episodes", common.episodes, "Number of training episodes")
      ->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-shield", no_shield, "Disable the safety shield (same as --controller dqn)");

  std::string checkpoint;
  std::string eval_controller;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one controller in steady state");
  add_common(eval_cmd);
  eval_cmd->add_option("--controller", eval_controller, "fcs_mpc, dqn or safe_dqn")
      ->check(CLI::IsMember({"fcs_mpc", "dqn", "safe_dqn"}));
  eval_cmd->add_option("--checkpoint", checkpoint, "Trained agent parameter file");

  std::vector<std::string> controllers{"fcs_mpc", "safe_dqn"};
  auto* compare_cmd = app.add_subcommand("compare", "Side-by-side evaluation of several controllers");
  add_common(compare_cmd);
  compare_cmd->add_option("--controllers", controllers, "Controllers to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"fcs_mpc", "dqn", "safe_dqn"}));
  compare_cmd->add_option("--checkpoint", checkpoint, "Trained agent parameter file for DQN controllers");

  std::string param = "both";
  std::string deltas = "-0.3,-0.15,0,0.15,0.3";
  bool joint = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "L_f / C_f sensitivity sweep of shielded training");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--episodes", common.episodes, "Training episodes per run")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--param", param, "lf, cf or both (one parameter at a time)")
      ->check(CLI::IsMember({"lf", "cf", "both"}));
  sweep_cmd->add_option("--deltas", deltas, "Comma-separated fractional deviations within [-0.3, 0.3]");
  sweep_cmd->add_flag("--joint", joint, "Vary L_f and C_f jointly over the full grid");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) return cmd_train(common, controller, no_shield, out);
    if (*eval_cmd) return cmd_eval(common, eval_controller, checkpoint, out);
    if (*compare_cmd) return cmd_compare(common, controllers, checkpoint, out);
    if (*sweep_cmd) return cmd_sweep(common, param, deltas, joint, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const neural::CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace safevsc::cli
