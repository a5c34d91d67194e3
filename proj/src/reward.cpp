#include "podscale/reward.hpp"

#include <algorithm>

#include "podscale/error.hpp"

namespace podscale {

void RewardParams::validate() const {
  if (!(eta_lower > 0.0 && eta_lower < eta_upper && eta_upper <= 100.0)) {
    throw ConfigError("reward thresholds must satisfy 0 < eta_lower < eta_upper <= 100");
  }
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must be in (0, 1]");
}

double utilization_reward(double eta, double eta_prev, const RewardParams& params) {
  if (eta >= params.eta_lower && eta <= params.eta_upper) {
    return 1.0 + eta / (params.eta_upper - params.eta_lower);
  }
  if (eta < params.eta_lower) {
    const double delta = eta - eta_prev;
    if (delta > 0.0) return std::min(delta / 10.0, 1.0);
    return std::max(delta / 10.0, -1.0);
  }
  return 0.0;
}

double weighted_response_time(std::span<const PriorityResponse> services) {
  double omega = 0.0;
  for (const auto& s : services) omega += (1.0 + s.priority) * s.response_s;
  return omega;
}

double shared_reward(double omega, double alpha) { return 1.0 - alpha * (omega - 0.01); }

double total_reward(double rho, double r_shared, double beta) { return beta * rho + r_shared; }

RewardBreakdown reward_breakdown(double eta, double eta_prev, double omega, const RewardParams& params) {
  RewardBreakdown out;
  out.rho = utilization_reward(eta, eta_prev, params);
  out.omega = omega;
  out.r_shared = shared_reward(omega, params.alpha);
  if (params.clip_shared) out.r_shared = std::max(out.r_shared, params.shared_floor);
  out.r_total = total_reward(out.rho, out.r_shared, params.beta);
  return out;
}

}  // namespace podscale
