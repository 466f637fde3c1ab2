#pragma once

#include <cmath>
#include <numbers>

namespace safevsc {

/// Two-axis stationary-frame quantity (volts or amperes).
struct AlphaBeta {
  double alpha = 0.0;
  double beta = 0.0;

  double norm() const { return std::hypot(alpha, beta); }
  double squared_norm() const { return alpha * alpha + beta * beta; }
  bool finite() const { return std::isfinite(alpha) && std::isfinite(beta); }

  friend AlphaBeta operator+(AlphaBeta x, AlphaBeta y) { return {x.alpha + y.alpha, x.beta + y.beta}; }
  friend AlphaBeta operator-(AlphaBeta x, AlphaBeta y) { return {x.alpha - y.alpha, x.beta - y.beta}; }
  friend AlphaBeta operator*(double k, AlphaBeta x) { return {k * x.alpha, k * x.beta}; }
  friend AlphaBeta operator/(AlphaBeta x, double k) { return {x.alpha / k, x.beta / k}; }
  friend bool operator==(const AlphaBeta&, const AlphaBeta&) = default;
};

struct PhaseValues {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Amplitude-invariant Clarke transform: alpha/beta amplitudes equal phase peaks.
AlphaBeta clarke(double a, double b, double c);
inline AlphaBeta clarke(const PhaseValues& p) { return clarke(p.a, p.b, p.c); }

/// Inverse of clarke() assuming a zero-sequence-free signal.
PhaseValues inverse_clarke(AlphaBeta v);

/// Rotating voltage reference. Amplitude is the per-phase peak.
struct ReferenceSpec {
  double amplitude = 200.0;
  double frequency = 50.0;
  double phase0 = 0.0;

  double angular_frequency() const { return 2.0 * std::numbers::pi * frequency; }
  void validate() const;
};

/// (amplitude cos(wt + phase0), amplitude sin(wt + phase0)).
AlphaBeta reference_at(const ReferenceSpec& spec, double t);

}  // namespace safevsc
