#pragma once

#include <array>
#include <limits>

#include "safevsc/plant.hpp"

namespace safevsc {

struct MpcConfig {
  double i_max = 20.0;
  Scheme prediction_scheme = Scheme::exact_zoh;
  PlantParams model_params{};  // the controller's belief about the plant
  // Optional damping term weight; 0 disables it.
  double lambda_d = 0.0;
  // Angular frequency of the reference, used only by the damping term.
  double omega_ref = 2.0 * 3.14159265358979323846 * 50.0;

  void validate() const;
};

/// Cost assigned to predictions that violate the current limit.
inline constexpr double kInfeasibleCost = std::numeric_limits<double>::infinity();

/// Squared voltage tracking error, or kInfeasibleCost if |i_f| > i_max.
double mpc_cost(const PlantState& pred, AlphaBeta ref, double i_max);

/// (C w v*_b - i_fa + i_oa)^2 + (C w v*_a + i_fb - i_ob)^2
double derivative_cost(const PlantState& pred, AlphaBeta ref, const PlantParams& p, double omega_ref);

struct MpcDecision {
  SwitchAction action;
  double cost = kInfeasibleCost;
  bool all_infeasible = false;
  std::array<double, kActionCount> costs{};
};

/// One-step FCS-MPC over the seven voltage vectors.
class FcsMpc {
 public:
  explicit FcsMpc(MpcConfig cfg);

  const MpcConfig& config() const { return cfg_; }
  const DiscreteModel& model() const { return model_; }

  PlantState predict(const PlantState& state, const SwitchAction& a) const {
    return step(state, a, model_, cfg_.model_params);
  }

  double cost(const PlantState& pred, AlphaBeta ref) const;

  /// argmin of cost over all vectors. Ties keep `prev`, otherwise the lowest
  /// index wins. If every vector is infeasible the one with the smallest
  /// predicted current is returned and all_infeasible is set.
  MpcDecision select(const PlantState& state, AlphaBeta ref, const SwitchAction& prev) const;

 private:
  MpcConfig cfg_;
  DiscreteModel model_;
};

PlantState predict_one_step(const PlantState& state, const SwitchAction& a, const MpcConfig& cfg);

inline SwitchAction select_mpc_action(const PlantState& state, AlphaBeta ref, const MpcConfig& cfg,
                                      const SwitchAction& prev) {
  return FcsMpc(cfg).select(state, ref, prev).action;
}

}  // namespace safevsc
