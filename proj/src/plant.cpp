#include "safevsc/plant.hpp"

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

namespace safevsc {

void PlantParams::validate() const {
  auto positive = [](double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(v_dc, "v_dc");
  positive(l_f, "l_f");
  positive(c_f, "c_f");
  positive(r_load, "r_load");
  positive(t_s, "t_s");
  if (!(r_f >= 0.0) || !std::isfinite(r_f)) throw std::invalid_argument("r_f must be non-negative");
}

Gates active_gates(int index) {
  static constexpr std::array<Gates, kActionCount> table{{
      {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 1, 1}, {0, 0, 1}, {1, 0, 1}, {0, 0, 0},
  }};
  if (index < 1 || index > kActionCount) throw std::out_of_range("action index must be in [1, 7]");
  return table[static_cast<std::size_t>(index - 1)];
}

SwitchAction make_action(int index, Gates previous) {
  if (index != kZeroVectorIndex) return {index, active_gates(index)};
  constexpr Gates low{0, 0, 0};
  constexpr Gates high{1, 1, 1};
  return {index, high.toggles_from(previous) < low.toggles_from(previous) ? high : low};
}

std::string_view to_string(Scheme s) { return s == Scheme::euler ? "euler" : "exact_zoh"; }

Scheme scheme_from_string(std::string_view s) {
  if (s == "euler") return Scheme::euler;
  if (s == "exact_zoh") return Scheme::exact_zoh;
  throw std::invalid_argument("unknown discretization scheme '" + std::string(s) + "'");
}

ContinuousModel continuous_matrices(const PlantParams& p) {
  return {
      {-p.r_f / p.l_f, -1.0 / p.l_f, 1.0 / p.c_f, 0.0},
      {1.0 / p.l_f, 0.0, 0.0, -1.0 / p.c_f},
  };
}

DiscreteModel discretize(const Mat2& a, const Mat2& b, double t_s, Scheme scheme) {
  if (!(t_s > 0.0)) throw std::invalid_argument("t_s must be positive");
  DiscreteModel m;
  m.t_s = t_s;
  m.scheme = scheme;
  if (scheme == Scheme::euler) {
    m.a_d = {1.0 + a.m00 * t_s, a.m01 * t_s, a.m10 * t_s, 1.0 + a.m11 * t_s};
    m.b_d = {b.m00 * t_s, b.m01 * t_s, b.m10 * t_s, b.m11 * t_s};
    return m;
  }
  // exp([[A, B], [0, 0]] t_s) = [[A_d, B_d], [0, I]]
  Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
  aug << a.m00, a.m01, b.m00, b.m01,  //
      a.m10, a.m11, b.m10, b.m11,     //
      0, 0, 0, 0,                     //
      0, 0, 0, 0;
  const Eigen::Matrix4d phi = (aug * t_s).exp();
  m.a_d = {phi(0, 0), phi(0, 1), phi(1, 0), phi(1, 1)};
  m.b_d = {phi(0, 2), phi(0, 3), phi(1, 2), phi(1, 3)};
  return m;
}

AlphaBeta inverter_voltage(Gates g, double v_dc) {
  const double sa = g.a, sb = g.b, sc = g.c;
  const double va = v_dc * (2.0 * sa - sb - sc) / 3.0;
  const double vb = v_dc * (2.0 * sb - sa - sc) / 3.0;
  const double vc = v_dc * (2.0 * sc - sa - sb) / 3.0;
  return clarke(va, vb, vc);
}

AlphaBeta inverter_voltage(const SwitchAction& action, double v_dc) { return inverter_voltage(action.gates, v_dc); }

PlantState step_with_voltage(const PlantState& s, AlphaBeta v_i, const DiscreteModel& m, const PlantParams& p) {
  const AlphaBeta i_o = load_current(s.v_f, p.r_load);
  const Mat2& a = m.a_d;
  const Mat2& b = m.b_d;
  PlantState next;
  next.i_f.alpha = a.m00 * s.i_f.alpha + a.m01 * s.v_f.alpha + b.m00 * v_i.alpha + b.m01 * i_o.alpha;
  next.v_f.alpha = a.m10 * s.i_f.alpha + a.m11 * s.v_f.alpha + b.m10 * v_i.alpha + b.m11 * i_o.alpha;
  next.i_f.beta = a.m00 * s.i_f.beta + a.m01 * s.v_f.beta + b.m00 * v_i.beta + b.m01 * i_o.beta;
  next.v_f.beta = a.m10 * s.i_f.beta + a.m11 * s.v_f.beta + b.m10 * v_i.beta + b.m11 * i_o.beta;
  next.t = s.t + m.t_s;
  return next;
}

PlantState step(const PlantState& s, const SwitchAction& action, const DiscreteModel& m, const PlantParams& p) {
  return step_with_voltage(s, inverter_voltage(action, p.v_dc), m, p);
}

double stored_energy(const PlantState& s, const PlantParams& p) {
  return 0.5 * p.l_f * s.i_f.squared_norm() + 0.5 * p.c_f * s.v_f.squared_norm();
}

}  // namespace safevsc
