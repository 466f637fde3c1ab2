#include "safevsc/signals.hpp"

#include <stdexcept>

namespace safevsc {

namespace {
constexpr double kInvSqrt3 = 0.57735026918962576451;
constexpr double kSqrt3Over2 = 0.86602540378443864676;
}  // namespace

AlphaBeta clarke(double a, double b, double c) {
  return {(2.0 / 3.0) * (a - 0.5 * b - 0.5 * c), kInvSqrt3 * (b - c)};
}

PhaseValues inverse_clarke(AlphaBeta v) {
  return {v.alpha, -0.5 * v.alpha + kSqrt3Over2 * v.beta, -0.5 * v.alpha - kSqrt3Over2 * v.beta};
}

void ReferenceSpec::validate() const {
  if (!(amplitude > 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("reference amplitude must be positive");
  if (!(frequency > 0.0) || !std::isfinite(frequency))
    throw std::invalid_argument("reference frequency must be positive");
  if (!std::isfinite(phase0)) throw std::invalid_argument("reference phase0 must be finite");
}

AlphaBeta reference_at(const ReferenceSpec& spec, double t) {
  const double theta = spec.angular_frequency() * t + spec.phase0;
  return {spec.amplitude * std::cos(theta), spec.amplitude * std::sin(theta)};
}

}  // namespace safevsc
