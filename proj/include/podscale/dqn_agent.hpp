#pragma once

#include <optional>
#include <vector>

#include "json.hpp"
#include "podscale/nn.hpp"
#include "podscale/observe.hpp"
#include "podscale/types.hpp"

namespace podscale {

struct DqnConfig {
  std::vector<int> hidden{64, 128, 64};
  double learning_rate = 1e-4;
  double gamma = 0.99;
  std::size_t buffer_capacity = 1000;
  std::size_t batch_size = 128;
  double tau = 0.005;
  double epsilon_start = 1.0;
  double epsilon_decay = 0.95;
  double epsilon_min = 0.05;
  Millicores step_mc = 25;

  void validate() const;
  nlohmann::json to_json() const;
  static DqnConfig from_json(const nlohmann::json& doc);
};

inline constexpr int kDqnActions = 3;  // 0: decrease, 1: hold, 2: increase

Millicores dqn_action_delta(int action, Millicores step_mc);

struct Transition {
  Observation state;
  int action = 1;
  double reward = 0.0;
  Observation next_state;
};

// FIFO ring buffer of transitions with uniform sampling without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest first.
  std::vector<const Transition*> contents() const;
  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const;
  void clear();

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;  // slot overwritten by the next push once full
};

// Per-service agent with an online and a target Q-network over three actions.
class DqnAgent {
 public:
  DqnAgent(int input_dim, DqnConfig config, Rng& init_rng);

  // Epsilon-greedy; explore=false is greedy. Ties resolve to the lowest index.
  int select_action(const Observation& obs, bool explore, Rng& rng) const;
  Eigen::VectorXd q_values(const Observation& obs) const;

  void store(Transition t) { buffer_.push(std::move(t)); }
  bool ready() const { return buffer_.size() >= config_.batch_size; }

  // r + gamma * max_a' Q_target(s', a') per transition.
  std::vector<double> bellman_targets(const std::vector<const Transition*>& batch) const;
  // Bellman targets from the target network, one optimizer step on the MSE
  // over the batch, then a soft target update. Returns the pre-update loss.
  double learn(const std::vector<const Transition*>& batch);
  // Samples a batch and learns; nullopt while the buffer holds fewer than J.
  std::optional<double> learn_from_buffer(Rng& rng);

  double decay_epsilon(int episode);
  double epsilon() const { return epsilon_; }
  void set_epsilon(double eps) { epsilon_ = eps; }

  const DqnConfig& config() const { return config_; }
  const nn::Mlp& q_network() const { return q_; }
  const nn::Mlp& target_network() const { return target_; }
  nn::Mlp& q_network() { return q_; }
  nn::Mlp& target_network() { return target_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  nlohmann::json to_json() const;
  static DqnAgent from_json(const nlohmann::json& doc);

 private:
  DqnAgent(DqnConfig config, nn::Mlp q, nn::Mlp target, nn::Adam optimizer, double epsilon);

  DqnConfig config_;
  nn::Mlp q_;
  nn::Mlp target_;
  nn::Adam optimizer_;
  ReplayBuffer buffer_;
  double epsilon_;
};

}  // namespace podscale
