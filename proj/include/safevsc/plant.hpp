#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "safevsc/signals.hpp"

namespace safevsc {

/// Physical constants of the converter, LC filter and resistive load (SI units).
struct PlantParams {
  double v_dc = 520.0;
  double l_f = 2.5e-3;
  double r_f = 0.013;
  double c_f = 30e-6;
  double r_load = 50.0;
  double t_s = 20e-6;

  void validate() const;
  friend bool operator==(const PlantParams&, const PlantParams&) = default;
};

/// Filter current and capacitor voltage in the stationary frame.
struct PlantState {
  AlphaBeta i_f;
  AlphaBeta v_f;
  double t = 0.0;

  bool finite() const { return i_f.finite() && v_f.finite() && std::isfinite(t); }
  friend bool operator==(const PlantState&, const PlantState&) = default;
};

struct Gates {
  std::uint8_t a = 0;
  std::uint8_t b = 0;
  std::uint8_t c = 0;

  int toggles_from(Gates other) const { return (a != other.a) + (b != other.b) + (c != other.c); }
  friend bool operator==(const Gates&, const Gates&) = default;
};

inline constexpr int kActionCount = 7;
inline constexpr int kZeroVectorIndex = 7;

/// One of the seven voltage vectors. Indices 1..6 are the active vectors at
/// (index-1)*60 degrees; index 7 is the zero vector, realized as 000 or 111.
struct SwitchAction {
  int index = kZeroVectorIndex;
  Gates gates{};

  friend bool operator==(const SwitchAction&, const SwitchAction&) = default;
};

/// Builds the action for `index`, resolving the zero vector to whichever of
/// 000/111 toggles fewer legs relative to `previous` (ties go to 000).
SwitchAction make_action(int index, Gates previous = {});

/// Gate pattern of an active vector, or 000 for index 7.
Gates active_gates(int index);

enum class Scheme { euler, exact_zoh };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

/// Row-major 2x2 matrix.
struct Mat2 {
  double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;

  double operator()(int r, int c) const { return r == 0 ? (c == 0 ? m00 : m01) : (c == 0 ? m10 : m11); }
  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

struct ContinuousModel {
  Mat2 a;  // acts on [i_f; v_f]
  Mat2 b;  // acts on [v_i; i_o]
};

/// Per-axis discrete model; alpha and beta use the same matrices.
struct DiscreteModel {
  Mat2 a_d = Mat2::identity();
  Mat2 b_d;
  double t_s = 0.0;
  Scheme scheme = Scheme::exact_zoh;
};

ContinuousModel continuous_matrices(const PlantParams& p);

DiscreteModel discretize(const Mat2& a, const Mat2& b, double t_s, Scheme scheme);

inline DiscreteModel discretize(const PlantParams& p, Scheme scheme) {
  const auto cm = continuous_matrices(p);
  return discretize(cm.a, cm.b, p.t_s, scheme);
}

/// Inverter output voltage of `action` in the stationary frame.
AlphaBeta inverter_voltage(const SwitchAction& action, double v_dc);
AlphaBeta inverter_voltage(Gates gates, double v_dc);

inline AlphaBeta load_current(AlphaBeta v_f, double r_load) { return v_f / r_load; }

/// Advances one sampling period with the load current taken at step start.
PlantState step(const PlantState& state, const SwitchAction& action, const DiscreteModel& model,
                const PlantParams& p);

/// Same recurrence with an explicit inverter voltage.
PlantState step_with_voltage(const PlantState& state, AlphaBeta v_i, const DiscreteModel& model,
                             const PlantParams& p);

/// 0.5 L |i|^2 + 0.5 C |v|^2 over both axes.
double stored_energy(const PlantState& s, const PlantParams& p);

}  // namespace safevsc
