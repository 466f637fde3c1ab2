#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "safevsc/signals.hpp"

namespace safevsc {

struct Waveform {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::string label;
};

struct ThdResult {
  double fundamental = 0.0;        // peak magnitude of the fundamental
  std::vector<double> harmonics;   // peak magnitudes of orders 2..H (index 0 is order 2)
  double thd = 0.0;                // fraction, not percent
};

/// THD from exact DFT bins at integer multiples of f1 over a rectangular
/// window. The window must cover an integer number (>= 2) of f1 periods.
/// Throws std::invalid_argument otherwise, or when the fundamental is ~0.
ThdResult thd(const Waveform& w, double f1, int max_harmonic);

/// Peak magnitude of the DFT bin `bin` of `x` (bin counted in cycles per window).
double dft_magnitude(std::span<const double> x, std::size_t bin);

/// sqrt(mean |ref - v_f|^2). Throws on length mismatch.
double rms_tracking_error(std::span<const AlphaBeta> v_f, std::span<const AlphaBeta> ref);

struct LearningCurve {
  std::vector<double> rewards;
  std::vector<double> moving_average;  // trailing window, shorter at the start
  std::vector<double> max_current;
};

LearningCurve learning_curve_stats(std::span<const double> rewards, std::span<const double> max_current,
                                   std::size_t window = 10);

/// Trailing moving average; entry k averages rewards[max(0, k-window+1) .. k].
std::vector<double> moving_average(std::span<const double> x, std::size_t window);

double mean(std::span<const double> x);

}  // namespace safevsc
