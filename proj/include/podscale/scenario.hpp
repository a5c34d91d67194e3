#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "podscale/cluster.hpp"
#include "podscale/workload.hpp"

namespace podscale {

struct ScenarioService {
  ServiceSpec spec;
  Millicores initial_limit_mc = 0;  // 0: stay at the floor
  int add_tick = 0;
  std::optional<int> remove_tick;

  bool active_at(int tick) const {
    return tick >= add_tick && (!remove_tick || tick < *remove_tick);
  }
};

// Constant load over ticks [start, end] (inclusive). Values are req/s, or
// percentage shares when the scenario has a total rate. Services absent from
// `values` are inactive during the phase.
struct Phase {
  int start = 0;
  int end = 0;
  std::map<ServiceId, double> values;
};

struct KpiWindow {
  std::string name;
  int start = 0;
  int end = 0;  // inclusive
};

struct Scenario {
  std::string name;
  std::string description;
  int horizon = 0;
  ClusterConfig cluster;
  // When set, phase values in the file are percentage shares of this total.
  std::optional<double> total_rate_rps;
  std::vector<ScenarioService> services;
  std::vector<Phase> phases;
  std::vector<KpiWindow> windows;

  // Throws ConfigError unless phases tile [0, horizon), share rows sum to
  // 100, and phase activity matches the add/remove schedule.
  void validate() const;
  WorkloadTrace trace() const;
  double rate_rps(const Phase& phase, ServiceId id) const;
  // Most services simultaneously active.
  int max_concurrent() const;
  const ScenarioService& service(ServiceId id) const;
};

// Plain-text scenario format, see README for the grammar.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::filesystem::path& path);
void write_scenario(std::ostream& out, const Scenario& scenario);

namespace scenarios {

// Three services sharing 100 req/s with load shifting every 7-8 s.
Scenario dynamic_load();
// dynamic_load with priorities given per service (0 low, 1 medium, 2 high).
Scenario priority(const std::string& labels);
// Services added at 16 s and 31 s with the pool fully allocated; service 1
// removed at 46 s.
Scenario scalability();
// No requests at all.
Scenario idle();

std::vector<std::string> names();
// Built-in by name, or a scenario file path.
Scenario resolve(const std::string& name_or_path);

}  // namespace scenarios

}  // namespace podscale
