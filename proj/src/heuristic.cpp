#include "podscale/heuristic.hpp"

#include <limits>

#include "podscale/error.hpp"

namespace podscale {

void HeuristicConfig::validate() const {
  if (!(lower_threshold < upper_threshold)) throw ConfigError("heuristic lower threshold must be below upper");
  if (step_mc <= 0) throw ConfigError("heuristic step_mc must be positive");
  if (cooldown_ticks < 0) throw ConfigError("heuristic cooldown must be non-negative");
}

nlohmann::json HeuristicConfig::to_json() const {
  return {{"upper_threshold", upper_threshold},
          {"lower_threshold", lower_threshold},
          {"step_mc", step_mc},
          {"cooldown_ticks", cooldown_ticks}};
}

HeuristicConfig HeuristicConfig::from_json(const nlohmann::json& doc) {
  HeuristicConfig c;
  c.upper_threshold = doc.at("upper_threshold").get<double>();
  c.lower_threshold = doc.at("lower_threshold").get<double>();
  c.step_mc = doc.at("step_mc").get<Millicores>();
  c.cooldown_ticks = doc.at("cooldown_ticks").get<int>();
  return c;
}

Millicores heuristic_decide(double utilization_pct, const HeuristicConfig& config) {
  if (utilization_pct > config.upper_threshold) return config.step_mc;
  if (utilization_pct < config.lower_threshold) return -config.step_mc;
  return 0;
}

HeuristicController::HeuristicController(HeuristicConfig config)
    : config_(config), since_change_(std::numeric_limits<int>::max() / 2) {
  config_.validate();
}

Millicores HeuristicController::decide(const MicroserviceState& service) {
  if (since_change_ < config_.cooldown_ticks) {
    ++since_change_;
    return 0;
  }
  const Millicores delta = heuristic_decide(service.utilization_pct(), config_);
  since_change_ = delta != 0 ? 0 : since_change_ + 1;
  return delta;
}

}  // namespace podscale
