#include "safevsc/mpc.hpp"

#include <stdexcept>

namespace safevsc {

void MpcConfig::validate() const {
  if (!(i_max > 0.0)) throw std::invalid_argument("mpc i_max must be positive");
  if (!(lambda_d >= 0.0)) throw std::invalid_argument("mpc lambda_d must be non-negative");
  model_params.validate();
}

double mpc_cost(const PlantState& pred, AlphaBeta ref, double i_max) {
  if (pred.i_f.norm() > i_max) return kInfeasibleCost;
  return (ref - pred.v_f).squared_norm();
}

double derivative_cost(const PlantState& pred, AlphaBeta ref, const PlantParams& p, double omega_ref) {
  const AlphaBeta i_o = load_current(pred.v_f, p.r_load);
  const double ca = p.c_f * omega_ref * ref.beta - pred.i_f.alpha + i_o.alpha;
  const double cb = p.c_f * omega_ref * ref.alpha + pred.i_f.beta - i_o.beta;
  return ca * ca + cb * cb;
}

FcsMpc::FcsMpc(MpcConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  model_ = discretize(cfg_.model_params, cfg_.prediction_scheme);
}

double FcsMpc::cost(const PlantState& pred, AlphaBeta ref) const {
  double g = mpc_cost(pred, ref, cfg_.i_max);
  if (cfg_.lambda_d > 0.0 && g != kInfeasibleCost)
    g += cfg_.lambda_d * derivative_cost(pred, ref, cfg_.model_params, cfg_.omega_ref);
  return g;
}

MpcDecision FcsMpc::select(const PlantState& state, AlphaBeta ref, const SwitchAction& prev) const {
  MpcDecision d;
  std::array<double, kActionCount> norms{};
  int best = 0;
  for (int idx = 1; idx <= kActionCount; ++idx) {
    const PlantState pred = predict(state, make_action(idx, prev.gates));
    const auto k = static_cast<std::size_t>(idx - 1);
    d.costs[k] = cost(pred, ref);
    norms[k] = pred.i_f.norm();
    if (best == 0 || d.costs[k] < d.costs[static_cast<std::size_t>(best - 1)]) best = idx;
  }
  const double best_cost = d.costs[static_cast<std::size_t>(best - 1)];
  if (best_cost == kInfeasibleCost) {
    int safest = 1;
    for (int idx = 2; idx <= kActionCount; ++idx)
      if (norms[static_cast<std::size_t>(idx - 1)] < norms[static_cast<std::size_t>(safest - 1)]) safest = idx;
    d.action = make_action(safest, prev.gates);
    d.all_infeasible = true;
    return d;
  }
  if (d.costs[static_cast<std::size_t>(prev.index - 1)] == best_cost) best = prev.index;
  d.action = make_action(best, prev.gates);
  d.cost = best_cost;
  return d;
}

PlantState predict_one_step(const PlantState& state, const SwitchAction& a, const MpcConfig& cfg) {
  return step(state, a, discretize(cfg.model_params, cfg.prediction_scheme), cfg.model_params);
}

}  // namespace safevsc
