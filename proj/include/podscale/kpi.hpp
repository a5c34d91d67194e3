#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "podscale/engine.hpp"

namespace podscale {

inline constexpr double kViolationThresholdS = 0.25;

inline bool is_violation(double response_s) { return response_s > kViolationThresholdS; }

// KPIs of one service over one run and window.
struct ServiceKpi {
  ServiceId service;
  int ticks = 0;
  int violations = 0;
  double violation_pct = 0.0;
  double mean_response_s = 0.0;
  // Sum of |applied| + |external| limit changes, millicores.
  double resource_delta_mc = 0.0;
};

// Services active in [start, end] (inclusive ticks), ascending id.
std::vector<ServiceKpi> compute_kpis(const EpisodeLog& log, int start, int end);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
};

Stat summarize(const std::vector<double>& values);

struct ServiceSummary {
  ServiceId service;
  int priority = 0;
  Stat violation_pct;
  Stat mean_response_s;
  Stat resource_delta_mc;
};

struct WindowSummary {
  std::string name;
  int start = 0;
  int end = 0;
  std::vector<ServiceSummary> services;
  // Means over services of the per-service means.
  double violation_pct = 0.0;
  double mean_response_s = 0.0;
  double resource_delta_mc = 0.0;

  const ServiceSummary& service(ServiceId id) const;
};

struct KpiReport {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<WindowSummary> windows;

  const WindowSummary& window(const std::string& name) const;
  nlohmann::json to_json() const;
  static KpiReport from_json(const nlohmann::json& doc);
};

struct WindowSpan {
  std::string name;
  int start = 0;
  int end = 0;
};

// Reduces per-iteration logs in iteration order.
KpiReport aggregate_kpis(const std::string& scenario, const std::string& policy, std::uint64_t seed,
                         const std::vector<WindowSpan>& windows, const std::vector<EpisodeLog>& runs);

}  // namespace podscale
