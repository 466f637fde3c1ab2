#include "safevsc/shield.hpp"

#include <stdexcept>

namespace safevsc {

void ShieldConfig::validate() const {
  if (!(i_max > 0.0)) throw std::invalid_argument("shield i_max must be positive");
  if (!(i_hw_limit >= i_max)) throw std::invalid_argument("shield i_hw_limit must be >= i_max");
  model_params.validate();
}

SafetyShield::SafetyShield(ShieldConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  model_ = discretize(cfg_.model_params, cfg_.prediction_scheme);
}

ShieldDecision SafetyShield::filter(const PlantState& ps, const SwitchAction& proposed, AlphaBeta ref,
                                    const SwitchAction& prev) const {
  ShieldDecision d;
  d.proposed = proposed;
  d.executed = proposed;
  if (!cfg_.enabled) return d;

  const PlantState proposed_pred = step(ps, proposed, model_, cfg_.model_params);
  d.predictions = 1;
  d.predicted_norm = proposed_pred.i_f.norm();
  if (d.predicted_norm <= cfg_.i_max) return d;

  d.intervened = true;
  int best_safe = 0;
  double best_cost = kInfeasibleCost;
  int least_current = proposed.index;
  double least_norm = d.predicted_norm;
  double best_safe_norm = 0.0;
  for (int idx = 1; idx <= kActionCount; ++idx) {
    if (idx == proposed.index) continue;
    const PlantState pred = step(ps, make_action(idx, prev.gates), model_, cfg_.model_params);
    ++d.predictions;
    const double n = pred.i_f.norm();
    if (n < least_norm) {
      least_norm = n;
      least_current = idx;
    }
    const double g = mpc_cost(pred, ref, cfg_.i_max);
    if (g < best_cost) {
      best_cost = g;
      best_safe = idx;
      best_safe_norm = n;
    }
  }
  if (best_safe != 0) {
    d.executed = make_action(best_safe, prev.gates);
    d.predicted_norm = best_safe_norm;
  } else {
    d.no_safe_action = true;
    d.executed = make_action(least_current, prev.gates);
    d.predicted_norm = least_norm;
  }
  return d;
}

AlphaBeta predict_current(const PlantState& ps, const SwitchAction& a, const ShieldConfig& cfg) {
  return SafetyShield(cfg).predict_current(ps, a);
}

ShieldDecision shield(const PlantState& ps, const SwitchAction& proposed, AlphaBeta ref, const SwitchAction& prev,
                      const ShieldConfig& cfg) {
  return SafetyShield(cfg).filter(ps, proposed, ref, prev);
}

}  // namespace safevsc
