#include "podscale/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "podscale/error.hpp"

namespace podscale {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_log_csv(std::ostream& out, const EpisodeLog& log) {
  out << kLogCsvHeader << "\n";
  out << std::setprecision(10);
  for (const auto& r : log) {
    out << r.episode << ',' << r.tick << ',' << r.service.value << ',' << r.priority << ',' << r.rate_rps << ','
        << r.limit_mc << ',' << r.usage_mc << ',' << r.utilization_pct << ',' << r.response_s << ','
        << r.backlog_mcs << ',' << r.action << ',' << r.requested_delta_mc << ',' << r.applied_delta_mc << ','
        << r.external_delta_mc << ',' << r.reward.rho << ',' << r.reward.omega << ',' << r.reward.r_shared << ','
        << r.reward.r_total << "\n";
  }
}

EpisodeLog read_log_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kLogCsvHeader) throw ConfigError("log CSV header mismatch");
  EpisodeLog log;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 18) throw ConfigError("log CSV row " + std::to_string(row) + " has wrong column count");
    try {
      TickRecord r;
      r.episode = std::stoi(c[0]);
      r.tick = std::stoi(c[1]);
      r.service = ServiceId{std::stoi(c[2])};
      r.priority = std::stoi(c[3]);
      r.rate_rps = std::stod(c[4]);
      r.limit_mc = std::stoll(c[5]);
      r.usage_mc = std::stod(c[6]);
      r.utilization_pct = std::stod(c[7]);
      r.response_s = std::stod(c[8]);
      r.backlog_mcs = std::stod(c[9]);
      r.action = std::stod(c[10]);
      r.requested_delta_mc = std::stoll(c[11]);
      r.applied_delta_mc = std::stoll(c[12]);
      r.external_delta_mc = std::stoll(c[13]);
      r.reward.rho = std::stod(c[14]);
      r.reward.omega = std::stod(c[15]);
      r.reward.r_shared = std::stod(c[16]);
      r.reward.r_total = std::stod(c[17]);
      log.push_back(r);
    } catch (const std::logic_error&) {
      throw ConfigError("log CSV row " + std::to_string(row) + " is malformed");
    }
  }
  return log;
}

void write_kpi_csv(std::ostream& out, const KpiReport& report) {
  out << "window,start,end,service,priority,violation_pct_mean,violation_pct_std,mean_response_s_mean,"
         "mean_response_s_std,resource_delta_mc_mean,resource_delta_mc_std\n";
  out << std::setprecision(10);
  for (const auto& w : report.windows) {
    for (const auto& s : w.services) {
      out << w.name << ',' << w.start << ',' << w.end << ',' << s.service.value << ',' << s.priority << ','
          << s.violation_pct.mean << ',' << s.violation_pct.stddev << ',' << s.mean_response_s.mean << ','
          << s.mean_response_s.stddev << ',' << s.resource_delta_mc.mean << ',' << s.resource_delta_mc.stddev
          << "\n";
    }
  }
}

std::string format_report(const KpiReport& report, const std::string& window) {
  const WindowSummary& w = report.window(window);
  std::ostringstream out;
  out << report.policy << " on " << report.scenario << ", window " << w.name << " [" << w.start << ", " << w.end
      << "], " << report.iterations << " iterations, seed " << report.seed << "\n";
  out << std::left << std::setw(9) << "service" << std::setw(10) << "priority" << std::setw(22) << "violations %"
      << std::setw(24) << "mean response s" << "resource delta mc\n";
  out << std::fixed;
  auto cell = [](const Stat& s, int precision) {
    std::ostringstream c;
    c << std::fixed << std::setprecision(precision) << s.mean << " +- " << s.stddev;
    return c.str();
  };
  for (const auto& s : w.services) {
    out << std::setw(9) << s.service.value << std::setw(10) << s.priority << std::setw(22) << cell(s.violation_pct, 2)
        << std::setw(24) << cell(s.mean_response_s, 4) << cell(s.resource_delta_mc, 1) << "\n";
  }
  out << std::setw(19) << "mean" << std::setw(22) << std::setprecision(2) << w.violation_pct << std::setw(24)
      << std::setprecision(4) << w.mean_response_s << std::setprecision(1) << w.resource_delta_mc << "\n";
  return out.str();
}

void write_svg(std::ostream& out, const LinePlot& plot) {
  const double width = 720, height = 400, left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = 0, xmax = 1, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymax = std::max(ymax, y);
      ymin = std::min(ymin, y);
    }
  }
  if (plot.reference) ymax = std::max(ymax, *plot.reference);
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  ymax *= 1.05;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(plot.title)
      << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3)
        << yv << "</text>\n";
    out << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << std::setprecision(0)
        << xv << "</text>\n";
    out << std::setprecision(2);
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << xml_escape(plot.x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << xml_escape(plot.y_label) << "</text>\n";
  if (plot.reference) {
    out << "<line x1=\"" << left << "\" y1=\"" << py(*plot.reference) << "\" x2=\"" << left + pw << "\" y2=\""
        << py(*plot.reference) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    const char* color = colors[i % 10];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : s.points) out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    const double ly = top + 14 + 16 * static_cast<double>(i);
    out << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 28 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + pw + 32 << "\" y=\"" << ly << "\">" << xml_escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_plot_csv(std::ostream& out, const LinePlot& plot) {
  std::set<double> xs;
  std::vector<std::map<double, double>> lookup;
  for (const auto& s : plot.series) {
    std::map<double, double> m;
    for (const auto& [x, y] : s.points) {
      xs.insert(x);
      m[x] = y;
    }
    lookup.push_back(std::move(m));
  }
  out << "x";
  for (const auto& s : plot.series) out << ',' << s.label;
  out << "\n" << std::setprecision(10);
  for (double x : xs) {
    out << x;
    for (const auto& m : lookup) {
      out << ',';
      auto it = m.find(x);
      if (it != m.end()) out << it->second;
    }
    out << "\n";
  }
}

}  // namespace podscale
