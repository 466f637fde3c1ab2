#include "safevsc/analysis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safevsc {

namespace {

struct Twiddles {
  std::vector<double> cos_t, sin_t;
  explicit Twiddles(std::size_t n) : cos_t(n), sin_t(n) {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      cos_t[k] = std::cos(step * static_cast<double>(k));
      sin_t[k] = std::sin(step * static_cast<double>(k));
    }
  }
};

// Phase index is reduced modulo n, so each twiddle is an exact table entry.
double bin_magnitude(std::span<const double> x, std::size_t bin, const Twiddles& tw) {
  const std::size_t n = x.size();
  double re = 0.0, im = 0.0;
  std::size_t idx = 0;
  const std::size_t stride = bin % n;
  for (std::size_t k = 0; k < n; ++k) {
    re += x[k] * tw.cos_t[idx];
    im -= x[k] * tw.sin_t[idx];
    idx += stride;
    if (idx >= n) idx -= n;
  }
  const double scale = (stride == 0 || 2 * stride == n) ? 1.0 : 2.0;
  return scale * std::hypot(re, im) / static_cast<double>(n);
}

}  // namespace

double dft_magnitude(std::span<const double> x, std::size_t bin) {
  if (x.empty()) throw std::invalid_argument("dft of empty signal");
  return bin_magnitude(x, bin, Twiddles(x.size()));
}

ThdResult thd(const Waveform& w, double f1, int max_harmonic) {
  if (!(w.sample_rate > 0.0) || !(f1 > 0.0)) throw std::invalid_argument("thd needs a positive sample rate and f1");
  if (max_harmonic < 2) throw std::invalid_argument("thd needs max_harmonic >= 2");
  const double periods_exact = static_cast<double>(w.samples.size()) * f1 / w.sample_rate;
  const double periods = std::round(periods_exact);
  if (periods < 2.0 || std::abs(periods_exact - periods) > 1e-9 * periods)
    throw std::invalid_argument("thd window must span an integer number (>= 2) of fundamental periods");
  const auto cycles = static_cast<std::size_t>(periods);
  const std::size_t n = w.samples.size();

  ThdResult r;
  const Twiddles tw(n);
  r.fundamental = bin_magnitude(w.samples, cycles, tw);
  if (!(r.fundamental > 1e-12)) throw std::invalid_argument("no fundamental component in waveform");
  double sum_sq = 0.0;
  for (int h = 2; h <= max_harmonic; ++h) {
    const std::size_t bin = cycles * static_cast<std::size_t>(h);
    const double mag = 2 * bin <= n ? bin_magnitude(w.samples, bin, tw) : 0.0;
    r.harmonics.push_back(mag);
    sum_sq += mag * mag;
  }
  r.thd = std::sqrt(sum_sq) / r.fundamental;
  return r;
}

double rms_tracking_error(std::span<const AlphaBeta> v_f, std::span<const AlphaBeta> ref) {
  if (v_f.size() != ref.size()) throw std::invalid_argument("trace lengths differ");
  if (v_f.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < v_f.size(); ++k) acc += (ref[k] - v_f[k]).squared_norm();
  return std::sqrt(acc / static_cast<double>(v_f.size()));
}

std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be positive");
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const std::size_t lo = k + 1 >= window ? k + 1 - window : 0;
    double acc = 0.0;
    for (std::size_t j = lo; j <= k; ++j) acc += x[j];
    out[k] = acc / static_cast<double>(k + 1 - lo);
  }
  return out;
}

LearningCurve learning_curve_stats(std::span<const double> rewards, std::span<const double> max_current,
                                   std::size_t window) {
  if (rewards.empty()) throw std::invalid_argument("learning curve needs at least one episode");
  if (max_current.size() != rewards.size()) throw std::invalid_argument("reward and current series differ in length");
  return {{rewards.begin(), rewards.end()}, moving_average(rewards, window), {max_current.begin(), max_current.end()}};
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

}  // namespace safevsc
