#include "podscale/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "podscale/error.hpp"

namespace podscale {

MilliRate rps_to_rate(double rps) {
  if (!std::isfinite(rps) || rps < 0.0) {
    throw ConfigError("request rate must be finite and non-negative");
  }
  return static_cast<MilliRate>(std::llround(rps * 1000.0));
}

void ClusterConfig::validate() const {
  if (capacity_mc <= 0) throw ConfigError("capacity_mc must be positive");
  if (min_limit_mc <= 0) throw ConfigError("min_limit_mc must be positive");
  if (min_limit_mc > capacity_mc) throw ConfigError("min_limit_mc exceeds capacity_mc");
  if (tick_seconds <= 0) throw ConfigError("tick_seconds must be positive");
}

double MicroserviceState::utilization_pct() const {
  if (limit_mc <= 0) return 0.0;
  return std::clamp(100.0 * usage_mc / static_cast<double>(limit_mc), 0.0, 100.0);
}

Cluster::Cluster(ClusterConfig config) : config_(config) { config_.validate(); }

bool Cluster::contains(ServiceId id) const { return services_.contains(id); }

const MicroserviceState& Cluster::service(ServiceId id) const {
  auto it = services_.find(id);
  if (it == services_.end()) {
    throw StateError("service " + std::to_string(id.value) + " is not active");
  }
  return it->second;
}

MicroserviceState& Cluster::mutable_service(ServiceId id) {
  return const_cast<MicroserviceState&>(std::as_const(*this).service(id));
}

std::vector<ServiceId> Cluster::active_ids() const {
  std::vector<ServiceId> ids;
  ids.reserve(services_.size());
  for (const auto& [id, s] : services_) ids.push_back(id);
  return ids;
}

void Cluster::refresh_response(MicroserviceState& s) const {
  const double work = s.backlog_mcs() + static_cast<double>(s.work_per_request_mcs);
  s.response_s = work / static_cast<double>(s.limit_mc);
}

void Cluster::add_service(const ServiceSpec& spec) {
  if (services_.contains(spec.id)) {
    throw StateError("service " + std::to_string(spec.id.value) + " already exists");
  }
  if (spec.priority < 0) throw ConfigError("priority must be non-negative");
  if (spec.work_per_request_mcs <= 0) throw ConfigError("work_per_request_mcs must be positive");
  if (free_mc() < config_.min_limit_mc) {
    throw StateError("free pool below min_limit_mc; reclaim capacity before adding service " +
                     std::to_string(spec.id.value));
  }
  MicroserviceState s;
  s.id = spec.id;
  s.priority = spec.priority;
  s.work_per_request_mcs = spec.work_per_request_mcs;
  s.limit_mc = config_.min_limit_mc;
  refresh_response(s);
  allocated_ += s.limit_mc;
  services_.emplace(spec.id, s);
}

Millicores Cluster::remove_service(ServiceId id) {
  auto it = services_.find(id);
  if (it == services_.end()) {
    throw StateError("service " + std::to_string(id.value) + " is not active");
  }
  const Millicores released = it->second.limit_mc;
  allocated_ -= released;
  services_.erase(it);
  return released;
}

Millicores Cluster::resize_in_place(ServiceId id, Millicores delta_mc) {
  MicroserviceState& s = mutable_service(id);
  const Millicores upper = s.limit_mc + free_mc();
  const Millicores target = std::clamp(s.limit_mc + delta_mc, config_.min_limit_mc, upper);
  const Millicores applied = target - s.limit_mc;
  s.limit_mc = target;
  allocated_ += applied;
  refresh_response(s);
  return applied;
}

void Cluster::set_priority(ServiceId id, int priority) {
  if (priority < 0) throw ConfigError("priority must be non-negative");
  mutable_service(id).priority = priority;
}

void Cluster::step(const WorkloadSlice& slice) {
  for (const auto& [id, rate] : slice) {
    if (!services_.contains(id)) {
      throw TraceError("workload references inactive service " + std::to_string(id.value));
    }
    if (rate < 0) throw TraceError("negative request rate for service " + std::to_string(id.value));
  }
  const auto tick = static_cast<std::int64_t>(config_.tick_seconds);
  for (auto& [id, s] : services_) {
    auto it = slice.find(id);
    s.rate = it == slice.end() ? 0 : it->second;
    // rate [1e-3 req/s] * w [mc*s] * tick [s] lands directly in micro-work.
    const MicroWork arriving = s.rate * s.work_per_request_mcs * tick;
    const MicroWork capacity = s.limit_mc * kMicroWorkPerMcs * tick;
    const MicroWork processed = std::min(s.backlog + arriving, capacity);
    s.backlog = s.backlog + arriving - processed;
    s.processed = processed;
    s.total_arrived += arriving;
    s.total_processed += processed;
    s.usage_mc = static_cast<double>(processed) / static_cast<double>(kMicroWorkPerMcs * tick);
    refresh_response(s);
  }
}

}  // namespace podscale
