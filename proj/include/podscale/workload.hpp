#pragma once

#include <vector>

#include "podscale/cluster.hpp"
#include "podscale/rng.hpp"

namespace podscale {

struct ServiceEvent {
  enum class Kind { Add, Remove };
  int tick = 0;
  Kind kind = Kind::Add;
  ServiceSpec spec;
};

// Per-tick request rates plus add/remove events. Events at tick t are applied
// before the tick's decisions.
struct WorkloadTrace {
  std::vector<WorkloadSlice> slices;
  std::vector<ServiceEvent> events;

  int horizon() const { return static_cast<int>(slices.size()); }
  std::vector<ServiceEvent> events_at(int tick) const;
};

// Piecewise-constant random load used for training. Segment lengths are
// uniform in [min_segment, max_segment] ticks; within a segment every
// service's rate is uniform in [0, max_rate_rps].
struct SyntheticLoadConfig {
  int min_segment = 3;
  int max_segment = 10;
  double max_rate_rps = 50.0;
};

std::vector<WorkloadSlice> synthetic_load(const std::vector<ServiceId>& ids, int horizon,
                                          const SyntheticLoadConfig& config, Rng& rng);

// Replaces each rate by a Poisson request count over one tick, modelling
// arrival noise between evaluation iterations.
WorkloadSlice poisson_jitter(const WorkloadSlice& slice, int tick_seconds, Rng& rng);

}  // namespace podscale
