#pragma once

#include "safevsc/mpc.hpp"
#include "safevsc/plant.hpp"

namespace safevsc {

struct ShieldConfig {
  double i_max = 20.0;       // shield threshold
  double i_hw_limit = 24.0;  // physical damage limit
  PlantParams model_params{};
  Scheme prediction_scheme = Scheme::exact_zoh;
  bool enabled = true;

  void validate() const;
};

struct ShieldDecision {
  SwitchAction executed;
  SwitchAction proposed;
  bool intervened = false;
  bool no_safe_action = false;  // fallback had to pick the least-bad unsafe vector
  double predicted_norm = 0.0;  // predicted |i_f(k+1)| of the executed action
  int predictions = 0;
};

/// Non-strict current-limit check |i| <= i_max.
inline bool is_safe(AlphaBeta i_pred, double i_max) { return i_pred.norm() <= i_max; }

/// One-step predictive action filter. Passes safe proposals through unchanged;
/// otherwise substitutes the tracking-cost minimizer among safe vectors, or
/// the smallest-current vector when none is safe.
class SafetyShield {
 public:
  explicit SafetyShield(ShieldConfig cfg);

  const ShieldConfig& config() const { return cfg_; }
  const DiscreteModel& model() const { return model_; }

  AlphaBeta predict_current(const PlantState& ps, const SwitchAction& a) const {
    return step(ps, a, model_, cfg_.model_params).i_f;
  }

  ShieldDecision filter(const PlantState& ps, const SwitchAction& proposed, AlphaBeta ref,
                        const SwitchAction& prev) const;

 private:
  ShieldConfig cfg_;
  DiscreteModel model_;
};

AlphaBeta predict_current(const PlantState& ps, const SwitchAction& a, const ShieldConfig& cfg);

ShieldDecision shield(const PlantState& ps, const SwitchAction& proposed, AlphaBeta ref, const SwitchAction& prev,
                      const ShieldConfig& cfg);

}  // namespace safevsc
