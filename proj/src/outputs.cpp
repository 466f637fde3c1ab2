#include "safevsc/outputs.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace safevsc {

std::string trace_csv(const EpisodeLog& log) {
  std::string out = "t,v_ref_a,v_ref_b,vf_a,vf_b,if_a,if_b,action,intervened,reward\n";
  for (const auto& r : log.steps)
    out += fmt::format("{:.9g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g}\n", r.t, r.ref.alpha,
                       r.ref.beta, r.state.v_f.alpha, r.state.v_f.beta, r.state.i_f.alpha, r.state.i_f.beta,
                       r.executed, r.intervened ? 1 : 0, r.reward);
  return out;
}

std::string waveform_csv(const SteadyStateTrace& tr) {
  std::string out = "t,va,vb,vc,ref_a,if_a,if_b,action,intervened\n";
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    const PhaseValues v = inverse_clarke(tr.v_f[k]);
    const PhaseValues r = inverse_clarke(tr.ref[k]);
    out += fmt::format("{:.9g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", tr.t[k], v.a, v.b, v.c, r.a,
                       tr.i_f[k].alpha, tr.i_f[k].beta, tr.action[k], static_cast<int>(tr.intervened[k]));
  }
  return out;
}

std::string spectrum_csv(const EvaluationMetrics& m, double f1) {
  std::string out = "frequency_hz,magnitude_v\n";
  out += fmt::format("{:.6g},{:.17g}\n", f1, m.fundamental);
  for (std::size_t k = 0; k < m.harmonics.size(); ++k)
    out += fmt::format("{:.6g},{:.17g}\n", f1 * static_cast<double>(k + 2), m.harmonics[k]);
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 80, kRight = 20, kTop = 40, kBottom = 50;

struct Series {
  std::vector<double> x, y;
  std::string color;
  std::string label;
  bool dashed = false;
};

struct Range {
  double lo, hi;
  double span() const { return hi - lo; }
};

Range padded(Range r) {
  if (!(r.hi > r.lo)) {
    const double d = std::max(1.0, std::abs(r.lo) * 0.1);
    return {r.lo - d, r.hi + d};
  }
  const double pad = 0.05 * r.span();
  return {r.lo - pad, r.hi + pad};
}

class Chart {
 public:
  Chart(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void add(Series s) { series_.push_back(std::move(s)); }
  void bars(bool b) { bars_ = b; }

  std::string render() const {
    Range xr{INFINITY, -INFINITY}, yr{INFINITY, -INFINITY};
    for (const auto& s : series_) {
      for (double v : s.x) xr = {std::min(xr.lo, v), std::max(xr.hi, v)};
      for (double v : s.y) yr = {std::min(yr.lo, v), std::max(yr.hi, v)};
    }
    if (bars_) yr.lo = std::min(yr.lo, 0.0);
    xr = padded(xr);
    yr = padded(yr);
    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / xr.span() * pw; };
    auto py = [&](double y) { return kTop + (yr.hi - y) / yr.span() * ph; };

    std::string out = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        kWidth, kHeight);
    out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    out += fmt::format("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", kWidth / 2,
                       title_);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", kLeft,
                       kTop, pw, ph);
    for (int k = 0; k <= 4; ++k) {
      const double yv = yr.lo + yr.span() * k / 4.0;
      const double xv = xr.lo + xr.span() * k / 4.0;
      out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.4g}</text>\n", kLeft - 6,
                         py(yv) + 4, yv);
      out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4g}</text>\n", px(xv),
                         kTop + ph + 18, xv);
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2, kHeight - 10,
                       xlabel_);
    out += fmt::format("<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                       kTop + ph / 2, ylabel_);

    double legend_y = kTop + 16;
    for (const auto& s : series_) {
      if (bars_) {
        const double bw = std::max(1.0, pw / std::max<std::size_t>(1, s.x.size()) * 0.8);
        for (std::size_t k = 0; k < s.x.size(); ++k) {
          const double top = py(std::max(0.0, s.y[k])), base = py(0.0);
          out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                             px(s.x[k]) - bw / 2, top, bw, std::max(0.0, base - top), s.color);
        }
      } else {
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"", s.color,
                           s.dashed ? " stroke-dasharray=\"6 4\"" : "");
        for (std::size_t k = 0; k < s.x.size(); ++k)
          out += fmt::format("{}{:.2f},{:.2f}", k ? " " : "", px(s.x[k]), py(s.y[k]));
        out += "\"/>\n";
      }
      if (!s.label.empty()) {
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
                           "stroke-width=\"2\"/>\n",
                           kLeft + pw - 150, legend_y, kLeft + pw - 130, s.color);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", kLeft + pw - 124, legend_y + 4, s.label);
        legend_y += 16;
      }
    }
    out += "</svg>\n";
    return out;
  }

 private:
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  bool bars_ = false;
};

std::vector<double> iota_from(std::size_t n, double start, double step) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = start + step * static_cast<double>(k);
  return v;
}

}  // namespace

std::vector<std::string> render_plots(const RunReport& report, double i_max) {
  if (report.episodes.empty() || !report.evaluation)
    throw std::invalid_argument("cannot plot a report without episodes and evaluation");
  const auto& ev = *report.evaluation;
  std::vector<std::string> out;

  const std::size_t n = report.episodes.size();
  const auto ep_x = iota_from(n, 1.0, 1.0);
  std::vector<double> rewards, max_i;
  for (const auto& e : report.episodes) {
    rewards.push_back(e.accumulated_reward);
    max_i.push_back(e.max_current);
  }

  Chart learning("Accumulated reward per episode (" + report.controller + ")", "episode", "accumulated reward");
  learning.add({ep_x, rewards, "#9ab", "per episode"});
  learning.add({ep_x, report.moving_average, "#c22", "moving average (10)"});
  out.push_back(learning.render());

  Chart current("Peak converter-side current per episode (" + report.controller + ")", "episode", "max |i_f| [A]");
  current.add({ep_x, max_i, "#27c", "max |i_f|"});
  current.add({{1.0, static_cast<double>(n)}, {i_max, i_max}, "#c22", "i_max", true});
  out.push_back(current.render());

  double t_s = 20e-6;
  if (report.config.contains("plant") && report.config["plant"].contains("t_s"))
    t_s = report.config["plant"]["t_s"].get<double>();
  const auto t_ms = iota_from(ev.waveform_a.size(), 0.0, t_s * 1e3);
  Chart wave("Steady-state capacitor voltages (" + report.controller + ")", "time [ms]", "voltage [V]");
  wave.add({t_ms, ev.waveform_a, "#c22", "v_a"});
  wave.add({t_ms, ev.waveform_b, "#2a2", "v_b"});
  wave.add({t_ms, ev.waveform_c, "#22c", "v_c"});
  wave.add({t_ms, ev.waveform_ref_a, "#888", "v*_a", true});
  out.push_back(wave.render());

  Chart spectrum(fmt::format("Harmonic magnitudes, THD = {:.2f}% ({})", 100.0 * ev.thd, report.controller),
                 "harmonic order", "% of fundamental");
  spectrum.bars(true);
  std::vector<double> orders, pct;
  const std::size_t shown = std::min<std::size_t>(ev.harmonics.size(), 49);
  for (std::size_t k = 0; k < shown; ++k) {
    orders.push_back(static_cast<double>(k + 2));
    pct.push_back(ev.fundamental > 0 ? 100.0 * ev.harmonics[k] / ev.fundamental : 0.0);
  }
  spectrum.add({orders, pct, "#27c", ""});
  out.push_back(spectrum.render());
  return out;
}

std::vector<std::filesystem::path> emit_plots(const RunReport& report, const std::filesystem::path& out_dir,
                                              double i_max) {
  const auto docs = render_plots(report, i_max);
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t k = 0; k < docs.size(); ++k) {
    paths.push_back(out_dir / kPlotNames[k]);
    write_text(paths.back(), docs[k]);
  }
  return paths;
}

}  // namespace safevsc
