#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "safevsc/harness.hpp"

namespace safevsc {

/// Column order: t, v_ref_a, v_ref_b, vf_a, vf_b, if_a, if_b, action, intervened, reward
std::string trace_csv(const EpisodeLog& log);

/// Steady-state evaluation window: t, va, vb, vc, ref_a, if_a, if_b, action, intervened
std::string waveform_csv(const SteadyStateTrace& trace);

/// frequency_hz, magnitude_v (fundamental first, then orders 2..H)
std::string spectrum_csv(const EvaluationMetrics& m, double f1);

void write_text(const std::filesystem::path& path, const std::string& text);

inline constexpr const char* kPlotNames[4] = {
    "learning_curve.svg", "current_trajectory.svg", "voltage_waveforms.svg", "harmonic_spectrum.svg"};

/// Standalone SVG renderings of a report. Throws std::invalid_argument for a
/// report without episodes or evaluation (before writing anything), and
/// std::runtime_error on I/O failure. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const RunReport& report, const std::filesystem::path& out_dir,
                                              double i_max = 20.0);

/// SVG text for each plot, in kPlotNames order.
std::vector<std::string> render_plots(const RunReport& report, double i_max = 20.0);

}  // namespace safevsc
