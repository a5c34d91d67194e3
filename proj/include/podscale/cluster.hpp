#pragma once

#include <map>
#include <optional>
#include <vector>

#include "podscale/types.hpp"

namespace podscale {

struct ClusterConfig {
  Millicores capacity_mc = 1200;
  Millicores min_limit_mc = 25;
  int tick_seconds = 1;

  void validate() const;
};

struct ServiceSpec {
  ServiceId id;
  int priority = 0;
  // Cost of one request in millicore-seconds.
  std::int64_t work_per_request_mcs = 8;
};

struct MicroserviceState {
  ServiceId id;
  Millicores limit_mc = 0;
  int priority = 0;
  std::int64_t work_per_request_mcs = 8;
  bool active = true;

  // Results of the most recent tick.
  MilliRate rate = 0;
  MicroWork processed = 0;
  MicroWork backlog = 0;
  double usage_mc = 0.0;
  double response_s = 0.0;

  // Lifetime counters for work conservation.
  MicroWork total_arrived = 0;
  MicroWork total_processed = 0;

  double backlog_mcs() const { return static_cast<double>(backlog) / kMicroWorkPerMcs; }
  // Percentage points in [0, 100].
  double utilization_pct() const;
};

// One tick's request rates. Active services missing from the slice receive
// no requests.
using WorkloadSlice = std::map<ServiceId, MilliRate>;

// Shared CPU pool hosting microservices whose limits are resized in place.
// Request processing is a fluid queue: each tick a service can process up to
// limit * tick of work; whatever is left stays in its backlog.
class Cluster {
 public:
  explicit Cluster(ClusterConfig config);

  const ClusterConfig& config() const { return config_; }

  // Service starts at the floor limit. Throws StateError when the id is
  // already in use or the free pool is smaller than the floor.
  void add_service(const ServiceSpec& spec);
  // Returns the released limit. The service's backlog is discarded.
  Millicores remove_service(ServiceId id);

  // Clamps the new limit to [min_limit, limit + free] and returns the delta
  // that was actually applied. Backlog and usage are untouched.
  Millicores resize_in_place(ServiceId id, Millicores delta_mc);

  void step(const WorkloadSlice& slice);

  bool contains(ServiceId id) const;
  const MicroserviceState& service(ServiceId id) const;
  // Active services in ascending id order.
  std::vector<ServiceId> active_ids() const;
  std::size_t active_count() const { return services_.size(); }

  Millicores allocated_mc() const { return allocated_; }
  Millicores free_mc() const { return config_.capacity_mc - allocated_; }

  void set_priority(ServiceId id, int priority);

 private:
  MicroserviceState& mutable_service(ServiceId id);
  void refresh_response(MicroserviceState& s) const;

  ClusterConfig config_;
  std::map<ServiceId, MicroserviceState> services_;
  Millicores allocated_ = 0;
};

}  // namespace podscale
