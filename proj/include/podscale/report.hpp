#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "podscale/engine.hpp"
#include "podscale/kpi.hpp"

namespace podscale {

// One row per tick per service.
inline constexpr const char* kLogCsvHeader =
    "episode,tick,service,priority,rate_rps,limit_mc,usage_mc,utilization_pct,response_s,backlog_mcs,"
    "action,requested_delta_mc,applied_delta_mc,external_delta_mc,rho,omega,r_shared,reward";

void write_log_csv(std::ostream& out, const EpisodeLog& log);
EpisodeLog read_log_csv(std::istream& in);

// window,service,priority,violation_pct_mean,violation_pct_std,... one row
// per window and service.
void write_kpi_csv(std::ostream& out, const KpiReport& report);

// Fixed-width text table of one window.
std::string format_report(const KpiReport& report, const std::string& window);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  // Optional horizontal reference line.
  std::optional<double> reference;
};

void write_svg(std::ostream& out, const LinePlot& plot);
// x,<label>... wide format; series are aligned on their x values.
void write_plot_csv(std::ostream& out, const LinePlot& plot);

}  // namespace podscale
