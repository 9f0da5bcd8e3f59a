/**
 * @file svg_plot.hpp
 * @brief Deterministic SVG line plots for sweep results (NMSE and SDR
 *        panels, one series per method).
 */
#pragma once

#include <string>

#include "xlvr/evals.hpp"

namespace xlvr::plot {

/// Two stacked panels: NMSE [dB] and SDR versus the sweep variable.
/// Methods without SDR output are omitted from the SDR panel.
std::string render_sweep_svg(const evals::EvalResult& result);

}  // namespace xlvr::plot
