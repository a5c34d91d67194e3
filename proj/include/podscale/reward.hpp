#pragma once

#include <span>
#include <utility>

namespace podscale {

struct RewardParams {
  double eta_lower = 30.0;  // percentage points
  double eta_upper = 60.0;
  double alpha = 5.0;
  double beta = 0.5;
  // Optional guard for training experiments; the reward itself is unclipped.
  bool clip_shared = false;
  double shared_floor = -10.0;

  void validate() const;
};

struct RewardBreakdown {
  double rho = 0.0;
  double omega = 0.0;
  double r_shared = 0.0;
  double r_total = 0.0;
};

struct PriorityResponse {
  int priority = 0;
  double response_s = 0.0;
};

// Utilization reward. In the target band it grows with utilization; below the
// band it rewards rising utilization (delta / 10, clamped to [-1, 1]); above the
// band it is 0.
double utilization_reward(double eta, double eta_prev, const RewardParams& params);

// Sum of (1 + priority) * response time.
double weighted_response_time(std::span<const PriorityResponse> services);

// 1 - alpha * (omega - 0.01). Identical for every agent within a tick.
double shared_reward(double omega, double alpha);

double total_reward(double rho, double r_shared, double beta);

RewardBreakdown reward_breakdown(double eta, double eta_prev, double omega, const RewardParams& params);

}  // namespace podscale
