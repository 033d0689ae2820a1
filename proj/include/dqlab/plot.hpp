#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dqlab/harness.hpp"

namespace dqlab {

enum class PlotMetric { MeanReturn, MeanLength, CrashRate, FixedStateQ };

std::string plot_filename(PlotMetric m);  // e.g. "return.svg"

// Static learning-curve figure: one mean polyline per method with a shaded
// +/-1 sd band, phases laid end to end with a divider at the task switch.
// Output bytes are a pure function of the rows.
std::string render_metric_svg(const std::vector<AggregatePoint>& agg, PlotMetric m);

// All four metric figures for a metrics table. Throws ConfigError when the
// table has no rows.
std::vector<std::pair<std::string, std::string>> render_all_plots(
    const std::vector<MetricsRow>& rows);

}  // namespace dqlab
