#include "dqlab/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace dqlab {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginL = 64.0;
constexpr double kMarginR = 18.0;
constexpr double kMarginT = 34.0;
constexpr double kMarginB = 48.0;

const char* method_color(const std::string& method) {
  if (method == "naive") return "#d62728";
  if (method == "transfer") return "#1f77b4";
  if (method == "decoupled") return "#2ca02c";
  return "#7f7f7f";
}

std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double metric_mean(const AggregatePoint& p, PlotMetric m) {
  switch (m) {
    case PlotMetric::MeanReturn: return p.return_mean;
    case PlotMetric::MeanLength: return p.length_mean;
    case PlotMetric::CrashRate: return p.crash_mean;
    case PlotMetric::FixedStateQ: return p.fixed_q_mean;
  }
  return 0.0;
}

double metric_sd(const AggregatePoint& p, PlotMetric m) {
  switch (m) {
    case PlotMetric::MeanReturn: return p.return_sd;
    case PlotMetric::MeanLength: return p.length_sd;
    case PlotMetric::CrashRate: return p.crash_sd;
    case PlotMetric::FixedStateQ: return p.fixed_q_sd;
  }
  return 0.0;
}

const char* metric_label(PlotMetric m) {
  switch (m) {
    case PlotMetric::MeanReturn: return "mean episode return";
    case PlotMetric::MeanLength: return "mean episode length";
    case PlotMetric::CrashRate: return "crash rate";
    case PlotMetric::FixedStateQ: return "mean max Q over fixed states";
  }
  return "";
}

// Largest 1/2/5 x 10^k step that yields at least four ticks.
double nice_step(double range) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double step;
  if (frac < 1.5) {
    step = 1.0;
  } else if (frac < 3.5) {
    step = 2.0;
  } else if (frac < 7.5) {
    step = 5.0;
  } else {
    step = 10.0;
  }
  return step * mag;
}

}  // namespace

std::string plot_filename(PlotMetric m) {
  switch (m) {
    case PlotMetric::MeanReturn: return "return.svg";
    case PlotMetric::MeanLength: return "length.svg";
    case PlotMetric::CrashRate: return "crash_rate.svg";
    case PlotMetric::FixedStateQ: return "fixed_state_q.svg";
  }
  return "plot.svg";
}

std::string render_metric_svg(const std::vector<AggregatePoint>& agg, PlotMetric m) {
  if (agg.empty()) throw ConfigError("plot: no aggregated points");

  // Phases are concatenated on the x axis; the phase-1 span comes from the
  // data itself (0 when only phase-2 rows are present).
  int phase1_span = 0;
  for (const AggregatePoint& p : agg) {
    if (p.phase == 1) phase1_span = std::max(phase1_span, p.episode);
  }
  const auto x_of = [&](const AggregatePoint& p) {
    return static_cast<double>(p.phase == 1 ? p.episode : phase1_span + p.episode);
  };

  std::map<std::string, std::vector<const AggregatePoint*>> by_method;
  double x_max = 1.0;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  bool has_phase2 = false;
  for (const AggregatePoint& p : agg) {
    by_method[p.method].push_back(&p);
    x_max = std::max(x_max, x_of(p));
    y_min = std::min(y_min, metric_mean(p, m) - metric_sd(p, m));
    y_max = std::max(y_max, metric_mean(p, m) + metric_sd(p, m));
    if (p.phase == 2) has_phase2 = true;
  }
  for (auto& [method, pts] : by_method) {
    std::sort(pts.begin(), pts.end(), [&](const AggregatePoint* a, const AggregatePoint* b) {
      return x_of(*a) < x_of(*b);
    });
  }
  if (y_min == y_max) {
    y_min -= 1.0;
    y_max += 1.0;
  } else {
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  const double plot_w = kWidth - kMarginL - kMarginR;
  const double plot_h = kHeight - kMarginT - kMarginB;
  const auto sx = [&](double x) { return kMarginL + x / x_max * plot_w; };
  const auto sy = [&](double y) {
    return kMarginT + (y_max - y) / (y_max - y_min) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmtg(kWidth) +
         "\" height=\"" + fmtg(kHeight) + "\" viewBox=\"0 0 " + fmtg(kWidth) + " " +
         fmtg(kHeight) + "\">\n";
  svg += "<rect width=\"" + fmtg(kWidth) + "\" height=\"" + fmtg(kHeight) +
         "\" fill=\"white\"/>\n";

  // Axes.
  svg += "<line x1=\"" + fmt2(kMarginL) + "\" y1=\"" + fmt2(kMarginT) + "\" x2=\"" +
         fmt2(kMarginL) + "\" y2=\"" + fmt2(kMarginT + plot_h) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt2(kMarginL) + "\" y1=\"" + fmt2(kMarginT + plot_h) +
         "\" x2=\"" + fmt2(kMarginL + plot_w) + "\" y2=\"" + fmt2(kMarginT + plot_h) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks.
  const double xstep = nice_step(x_max);
  for (double x = 0.0; x <= x_max + 1e-9; x += xstep) {
    const double px = sx(x);
    svg += "<line x1=\"" + fmt2(px) + "\" y1=\"" + fmt2(kMarginT + plot_h) + "\" x2=\"" +
           fmt2(px) + "\" y2=\"" + fmt2(kMarginT + plot_h + 4) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt2(px) + "\" y=\"" + fmt2(kMarginT + plot_h + 18) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmtg(x) + "</text>\n";
  }
  const double ystep = nice_step(y_max - y_min);
  const double y0 = std::ceil(y_min / ystep) * ystep;
  for (double y = y0; y <= y_max + 1e-9 * ystep; y += ystep) {
    const double py = sy(y);
    svg += "<line x1=\"" + fmt2(kMarginL - 4) + "\" y1=\"" + fmt2(py) + "\" x2=\"" +
           fmt2(kMarginL) + "\" y2=\"" + fmt2(py) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt2(kMarginL - 8) + "\" y=\"" + fmt2(py + 4) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmtg(std::abs(y) < 1e-12 ? 0.0 : y) +
           "</text>\n";
  }

  // Task-switch divider between the concatenated phases.
  if (phase1_span > 0 && has_phase2) {
    const double px = sx(static_cast<double>(phase1_span));
    svg += "<line x1=\"" + fmt2(px) + "\" y1=\"" + fmt2(kMarginT) + "\" x2=\"" + fmt2(px) +
           "\" y2=\"" + fmt2(kMarginT + plot_h) +
           "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
    svg += "<text x=\"" + fmt2(px + 4) + "\" y=\"" + fmt2(kMarginT + 12) +
           "\" font-size=\"11\" fill=\"#555555\">task switch</text>\n";
  }

  // Bands first so the mean curves draw over them.
  for (const auto& [method, pts] : by_method) {
    if (pts.size() < 2) continue;
    std::string poly;
    for (const AggregatePoint* p : pts) {
      poly += fmt2(sx(x_of(*p))) + "," + fmt2(sy(metric_mean(*p, m) + metric_sd(*p, m))) + " ";
    }
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
      poly += fmt2(sx(x_of(**it))) + "," + fmt2(sy(metric_mean(**it, m) - metric_sd(**it, m))) + " ";
    }
    poly.pop_back();
    svg += "<polygon points=\"" + poly + "\" fill=\"" + method_color(method) +
           "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
  }
  for (const auto& [method, pts] : by_method) {
    std::string line;
    for (const AggregatePoint* p : pts) {
      line += fmt2(sx(x_of(*p))) + "," + fmt2(sy(metric_mean(*p, m))) + " ";
    }
    if (!line.empty()) line.pop_back();
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" +
           method_color(method) + "\" stroke-width=\"1.5\"/>\n";
  }

  // Legend, top-left inside the plot area.
  double ly = kMarginT + 10.0;
  for (const auto& [method, pts] : by_method) {
    svg += "<rect x=\"" + fmt2(kMarginL + 10) + "\" y=\"" + fmt2(ly - 8) +
           "\" width=\"12\" height=\"12\" fill=\"" + method_color(method) + "\"/>\n";
    svg += "<text x=\"" + fmt2(kMarginL + 26) + "\" y=\"" + fmt2(ly + 2) +
           "\" font-size=\"12\">" + method + "</text>\n";
    ly += 17.0;
  }

  svg += "<text x=\"" + fmt2(kMarginL + plot_w / 2) + "\" y=\"" + fmt2(kHeight - 10) +
         "\" font-size=\"12\" text-anchor=\"middle\">episode</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt2(kMarginT + plot_h / 2) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt2(kMarginT + plot_h / 2) + ")\">" + std::string(metric_label(m)) + "</text>\n";
  svg += "<text x=\"" + fmt2(kMarginL + plot_w / 2) + "\" y=\"20\" font-size=\"13\" " +
         "text-anchor=\"middle\">" + std::string(metric_label(m)) +
         " (mean over seeds, band = 1 sd)</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::vector<std::pair<std::string, std::string>> render_all_plots(
    const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw ConfigError("plot: metrics table has no rows");
  const std::vector<AggregatePoint> agg = aggregate_seeds(rows);
  std::vector<std::pair<std::string, std::string>> out;
  for (PlotMetric m : {PlotMetric::MeanReturn, PlotMetric::MeanLength,
                       PlotMetric::CrashRate, PlotMetric::FixedStateQ}) {
    out.push_back({plot_filename(m), render_metric_svg(agg, m)});
  }
  return out;
}

}  // namespace dqlab
