#pragma once

#include "json.hpp"
#include "podscale/cluster.hpp"

namespace podscale {

struct HeuristicConfig {
  double upper_threshold = 60.0;  // utilization percentage points
  double lower_threshold = 30.0;
  Millicores step_mc = 50;
  int cooldown_ticks = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static HeuristicConfig from_json(const nlohmann::json& doc);
};

// Threshold scaler: +step above the band, -step below it, nothing inside.
// It sees only the service's own utilization, so priorities never affect it.
class HeuristicController {
 public:
  explicit HeuristicController(HeuristicConfig config);

  // Requested delta for this tick. A non-zero request starts the cooldown.
  Millicores decide(const MicroserviceState& service);
  int ticks_since_change() const { return since_change_; }
  const HeuristicConfig& config() const { return config_; }

 private:
  HeuristicConfig config_;
  int since_change_;
};

// The bare threshold rule without cooldown state.
Millicores heuristic_decide(double utilization_pct, const HeuristicConfig& config);

}  // namespace podscale
