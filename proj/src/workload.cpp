#include "podscale/workload.hpp"

#include <algorithm>
#include <cmath>

#include "podscale/error.hpp"

namespace podscale {

std::vector<ServiceEvent> WorkloadTrace::events_at(int tick) const {
  std::vector<ServiceEvent> out;
  for (const auto& e : events) {
    if (e.tick == tick) out.push_back(e);
  }
  return out;
}

std::vector<WorkloadSlice> synthetic_load(const std::vector<ServiceId>& ids, int horizon,
                                          const SyntheticLoadConfig& config, Rng& rng) {
  if (config.min_segment <= 0 || config.max_segment < config.min_segment) {
    throw ConfigError("invalid synthetic segment bounds");
  }
  if (!(config.max_rate_rps >= 0.0)) throw ConfigError("max_rate_rps must be non-negative");
  std::uniform_int_distribution<int> segment(config.min_segment, config.max_segment);
  std::uniform_real_distribution<double> rate(0.0, config.max_rate_rps);

  std::vector<WorkloadSlice> slices;
  slices.reserve(static_cast<std::size_t>(std::max(horizon, 0)));
  while (static_cast<int>(slices.size()) < horizon) {
    const int length = segment(rng);
    WorkloadSlice slice;
    for (ServiceId id : ids) slice[id] = rps_to_rate(rate(rng));
    for (int i = 0; i < length && static_cast<int>(slices.size()) < horizon; ++i) {
      slices.push_back(slice);
    }
  }
  return slices;
}

WorkloadSlice poisson_jitter(const WorkloadSlice& slice, int tick_seconds, Rng& rng) {
  WorkloadSlice out;
  for (const auto& [id, rate] : slice) {
    const double mean = rate_to_rps(rate) * tick_seconds;
    if (mean <= 0.0) {
      out[id] = 0;
      continue;
    }
    std::poisson_distribution<std::int64_t> arrivals(mean);
    const std::int64_t count = arrivals(rng);
    out[id] = count * 1000 / tick_seconds;
  }
  return out;
}

}  // namespace podscale
