#include "podscale/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "podscale/error.hpp"

namespace podscale {

std::vector<ServiceKpi> compute_kpis(const EpisodeLog& log, int start, int end) {
  struct Acc {
    int ticks = 0;
    int violations = 0;
    double response = 0.0;
    double delta = 0.0;
  };
  std::map<ServiceId, Acc> acc;
  for (const auto& r : log) {
    if (r.tick < start || r.tick > end) continue;
    Acc& a = acc[r.service];
    ++a.ticks;
    if (is_violation(r.response_s)) ++a.violations;
    a.response += r.response_s;
    a.delta += static_cast<double>(std::abs(r.applied_delta_mc) + std::abs(r.external_delta_mc));
  }
  std::vector<ServiceKpi> out;
  for (const auto& [id, a] : acc) {
    ServiceKpi k;
    k.service = id;
    k.ticks = a.ticks;
    k.violations = a.violations;
    k.violation_pct = 100.0 * a.violations / a.ticks;
    k.mean_response_s = a.response / a.ticks;
    k.resource_delta_mc = a.delta;
    out.push_back(k);
  }
  return out;
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

const ServiceSummary& WindowSummary::service(ServiceId id) const {
  for (const auto& s : services) {
    if (s.service == id) return s;
  }
  throw ConfigError("window '" + name + "' has no service " + std::to_string(id.value));
}

const WindowSummary& KpiReport::window(const std::string& name) const {
  for (const auto& w : windows) {
    if (w.name == name) return w;
  }
  throw ConfigError("report has no window '" + name + "'");
}

namespace {

nlohmann::json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.stddev}}; }

Stat stat_from(const nlohmann::json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

}  // namespace

nlohmann::json KpiReport::to_json() const {
  nlohmann::json doc = {{"scenario", scenario},
                        {"policy", policy},
                        {"seed", seed},
                        {"iterations", iterations},
                        {"violation_threshold_s", kViolationThresholdS},
                        {"windows", nlohmann::json::array()}};
  for (const auto& w : windows) {
    nlohmann::json wj = {{"name", w.name},
                         {"start", w.start},
                         {"end", w.end},
                         {"violation_pct", w.violation_pct},
                         {"mean_response_s", w.mean_response_s},
                         {"resource_delta_mc", w.resource_delta_mc},
                         {"services", nlohmann::json::array()}};
    for (const auto& s : w.services) {
      wj["services"].push_back({{"service", s.service.value},
                                {"priority", s.priority},
                                {"violation_pct", stat_json(s.violation_pct)},
                                {"mean_response_s", stat_json(s.mean_response_s)},
                                {"resource_delta_mc", stat_json(s.resource_delta_mc)}});
    }
    doc["windows"].push_back(std::move(wj));
  }
  return doc;
}

KpiReport KpiReport::from_json(const nlohmann::json& doc) {
  try {
    KpiReport r;
    r.scenario = doc.at("scenario").get<std::string>();
    r.policy = doc.at("policy").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.iterations = doc.at("iterations").get<int>();
    for (const auto& wj : doc.at("windows")) {
      WindowSummary w;
      w.name = wj.at("name").get<std::string>();
      w.start = wj.at("start").get<int>();
      w.end = wj.at("end").get<int>();
      w.violation_pct = wj.at("violation_pct").get<double>();
      w.mean_response_s = wj.at("mean_response_s").get<double>();
      w.resource_delta_mc = wj.at("resource_delta_mc").get<double>();
      for (const auto& sj : wj.at("services")) {
        ServiceSummary s;
        s.service = ServiceId{sj.at("service").get<int>()};
        s.priority = sj.at("priority").get<int>();
        s.violation_pct = stat_from(sj.at("violation_pct"));
        s.mean_response_s = stat_from(sj.at("mean_response_s"));
        s.resource_delta_mc = stat_from(sj.at("resource_delta_mc"));
        w.services.push_back(s);
      }
      r.windows.push_back(std::move(w));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed KPI report: ") + e.what());
  }
}

KpiReport aggregate_kpis(const std::string& scenario, const std::string& policy, std::uint64_t seed,
                         const std::vector<WindowSpan>& windows, const std::vector<EpisodeLog>& runs) {
  KpiReport report;
  report.scenario = scenario;
  report.policy = policy;
  report.seed = seed;
  report.iterations = static_cast<int>(runs.size());

  std::map<ServiceId, int> priorities;
  for (const auto& run : runs) {
    for (const auto& r : run) priorities.emplace(r.service, r.priority);
  }

  for (const auto& span : windows) {
    struct Series {
      std::vector<double> violation, response, delta;
    };
    std::map<ServiceId, Series> series;
    for (const auto& run : runs) {
      for (const auto& k : compute_kpis(run, span.start, span.end)) {
        Series& s = series[k.service];
        s.violation.push_back(k.violation_pct);
        s.response.push_back(k.mean_response_s);
        s.delta.push_back(k.resource_delta_mc);
      }
    }
    WindowSummary w;
    w.name = span.name;
    w.start = span.start;
    w.end = span.end;
    for (const auto& [id, s] : series) {
      ServiceSummary sum;
      sum.service = id;
      sum.priority = priorities[id];
      sum.violation_pct = summarize(s.violation);
      sum.mean_response_s = summarize(s.response);
      sum.resource_delta_mc = summarize(s.delta);
      w.violation_pct += sum.violation_pct.mean;
      w.mean_response_s += sum.mean_response_s.mean;
      w.resource_delta_mc += sum.resource_delta_mc.mean;
      w.services.push_back(sum);
    }
    if (!w.services.empty()) {
      const double n = static_cast<double>(w.services.size());
      w.violation_pct /= n;
      w.mean_response_s /= n;
      w.resource_delta_mc /= n;
    }
    report.windows.push_back(std::move(w));
  }
  return report;
}

}  // namespace podscale
