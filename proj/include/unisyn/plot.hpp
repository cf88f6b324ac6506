#pragma once

#include <string>

#include "unisyn/metrics.hpp"

namespace unisyn {

enum class PlotMetric { kPsnr, kSsim };

/// Grouped bar chart: one group per configuration, one bar per synthesized
/// modality, error bars at +/- one std.
std::string render_bar_chart_svg(const MetricsReport& report, PlotMetric metric);

}  // namespace unisyn
