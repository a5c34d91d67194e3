#pragma once

#include <optional>
#include <vector>

#include "json.hpp"
#include "podscale/nn.hpp"
#include "podscale/observe.hpp"
#include "podscale/types.hpp"

namespace podscale {

struct PpoConfig {
  std::vector<int> actor_hidden{64, 128, 128, 64};
  std::vector<int> critic_hidden{64, 128, 128, 64};
  double actor_learning_rate = 3e-4;
  double critic_learning_rate = 1e-3;
  double gamma = 0.99;
  double clip_epsilon = 0.2;
  double entropy_coef = 0.01;
  int update_epochs = 10;
  std::size_t batch_threshold = 600;
  double stddev_start = 0.5;
  double stddev_decay = 0.95;
  double stddev_min = 0.05;
  Millicores delta_max_mc = 100;
  // Bootstrap the return with V(s_next) at episode ends instead of 0.
  bool bootstrap_truncated = false;
  bool normalize_advantages = true;

  void validate() const;
  nlohmann::json to_json() const;
  static PpoConfig from_json(const nlohmann::json& doc);
};

struct RolloutRecord {
  Observation state;
  double raw_action = 0.0;  // unclamped Gaussian sample
  double action = 0.0;      // clamped to [-1, 1]
  double log_prob = 0.0;    // behavior policy, evaluated at raw_action
  double reward = 0.0;
  Observation next_state;
  bool episode_end = false;
};

struct ActionSample {
  double action = 0.0;
  double raw_action = 0.0;
  double log_prob = 0.0;
};

struct AdvantageEstimate {
  std::vector<double> returns;
  std::vector<double> advantages;  // R - V(s), before normalization
};

struct PpoLosses {
  double actor = 0.0;   // negated surrogate minus entropy bonus
  double critic = 0.0;  // value MSE
};

double gaussian_log_prob(double x, double mean, double stddev);
double gaussian_entropy(double stddev);
// min(r * A, clip(r, 1 - eps, 1 + eps) * A)
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

// Discounted return-to-go per record, reset after records flagged
// episode_end, and advantage R - V(s).
AdvantageEstimate compute_advantages(const std::vector<RolloutRecord>& buffer, const nn::Mlp& critic,
                                     double gamma, bool bootstrap_truncated = false);

Millicores continuous_action_delta(double action, Millicores delta_max_mc);

// Per-service actor-critic agent with a Gaussian policy of scheduled,
// state-independent standard deviation around a tanh-bounded mean.
class PpoAgent {
 public:
  PpoAgent(int input_dim, PpoConfig config, Rng& init_rng);

  // explore=false returns the mean with the log-probability of the mean.
  ActionSample sample_action(const Observation& obs, bool explore, Rng& rng) const;
  double mean_action(const Observation& obs) const;
  double value(const Observation& obs) const;

  void store(RolloutRecord record) { buffer_.push_back(std::move(record)); }
  void mark_episode_end();
  const std::vector<RolloutRecord>& buffer() const { return buffer_; }
  bool ready() const { return buffer_.size() >= config_.batch_threshold; }

  // K epochs of full-batch clipped-surrogate ascent and value regression,
  // then the buffer is cleared. nullopt (buffer untouched) when underfull.
  std::optional<PpoLosses> update();

  double decay_stddev(int episode);
  double stddev() const { return stddev_; }
  void set_stddev(double s);

  const PpoConfig& config() const { return config_; }
  const nn::Mlp& actor() const { return actor_; }
  const nn::Mlp& critic() const { return critic_; }
  nn::Mlp& actor() { return actor_; }
  nn::Mlp& critic() { return critic_; }

  nlohmann::json to_json() const;
  static PpoAgent from_json(const nlohmann::json& doc);

 private:
  PpoAgent() = default;
  PpoLosses run_update();

  PpoConfig config_;
  nn::Mlp actor_;
  nn::Mlp critic_;
  nn::Adam actor_opt_;
  nn::Adam critic_opt_;
  std::vector<RolloutRecord> buffer_;
  double stddev_ = 0.5;
};

}  // namespace podscale
