#include "podscale/dqn_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "podscale/error.hpp"

namespace podscale {

void DqnConfig::validate() const {
  if (hidden.empty()) throw ConfigError("dqn needs at least one hidden layer");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn gamma must be in [0, 1]");
  if (buffer_capacity == 0 || batch_size == 0) throw ConfigError("dqn buffer and batch must be positive");
  if (batch_size > buffer_capacity) throw ConfigError("dqn batch larger than replay buffer");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("dqn tau must be in [0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0)) {
    throw ConfigError("dqn epsilon bounds must satisfy 0 <= min <= start <= 1");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("dqn epsilon decay must be in (0, 1]");
  if (step_mc <= 0) throw ConfigError("dqn step_mc must be positive");
}

nlohmann::json DqnConfig::to_json() const {
  return {{"hidden", hidden},
          {"learning_rate", learning_rate},
          {"gamma", gamma},
          {"buffer_capacity", buffer_capacity},
          {"batch_size", batch_size},
          {"tau", tau},
          {"epsilon_start", epsilon_start},
          {"epsilon_decay", epsilon_decay},
          {"epsilon_min", epsilon_min},
          {"step_mc", step_mc}};
}

DqnConfig DqnConfig::from_json(const nlohmann::json& doc) {
  DqnConfig c;
  c.hidden = doc.at("hidden").get<std::vector<int>>();
  c.learning_rate = doc.at("learning_rate").get<double>();
  c.gamma = doc.at("gamma").get<double>();
  c.buffer_capacity = doc.at("buffer_capacity").get<std::size_t>();
  c.batch_size = doc.at("batch_size").get<std::size_t>();
  c.tau = doc.at("tau").get<double>();
  c.epsilon_start = doc.at("epsilon_start").get<double>();
  c.epsilon_decay = doc.at("epsilon_decay").get<double>();
  c.epsilon_min = doc.at("epsilon_min").get<double>();
  c.step_mc = doc.at("step_mc").get<Millicores>();
  return c;
}

Millicores dqn_action_delta(int action, Millicores step_mc) {
  switch (action) {
    case 0: return -step_mc;
    case 1: return 0;
    case 2: return step_mc;
    default: throw StateError("dqn action index out of range");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
  items_.reserve(capacity);
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

std::vector<const Transition*> ReplayBuffer::contents() const {
  std::vector<const Transition*> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(&items_[(next_ + i) % items_.size()]);
  return out;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (count > items_.size()) throw StateError("replay buffer holds fewer transitions than requested");
  std::vector<std::size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<const Transition*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(&items_[idx[i]]);
  return out;
}

void ReplayBuffer::clear() {
  items_.clear();
  next_ = 0;
}

namespace {

std::vector<int> q_dims(int input_dim, const std::vector<int>& hidden) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(kDqnActions);
  return dims;
}

}  // namespace

DqnAgent::DqnAgent(int input_dim, DqnConfig config, Rng& init_rng)
    : config_(std::move(config)), buffer_(config_.buffer_capacity), epsilon_(config_.epsilon_start) {
  config_.validate();
  q_ = nn::Mlp(q_dims(input_dim, config_.hidden), nn::OutputHead::Linear, init_rng);
  target_ = q_;
  optimizer_ = nn::Adam(q_, nn::AdamConfig{.learning_rate = config_.learning_rate});
}

DqnAgent::DqnAgent(DqnConfig config, nn::Mlp q, nn::Mlp target, nn::Adam optimizer, double epsilon)
    : config_(std::move(config)),
      q_(std::move(q)),
      target_(std::move(target)),
      optimizer_(std::move(optimizer)),
      buffer_(config_.buffer_capacity),
      epsilon_(epsilon) {}

Eigen::VectorXd DqnAgent::q_values(const Observation& obs) const { return q_.forward(obs.vector()); }

int DqnAgent::select_action(const Observation& obs, bool explore, Rng& rng) const {
  if (explore) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon_) {
      std::uniform_int_distribution<int> any(0, kDqnActions - 1);
      return any(rng);
    }
  }
  const Eigen::VectorXd q = q_values(obs);
  int best = 0;
  for (int a = 1; a < kDqnActions; ++a) {
    if (q(a) > q(best)) best = a;
  }
  return best;
}

std::vector<double> DqnAgent::bellman_targets(const std::vector<const Transition*>& batch) const {
  std::vector<const Observation*> next_states;
  next_states.reserve(batch.size());
  for (const Transition* t : batch) next_states.push_back(&t->next_state);
  const Eigen::MatrixXd next_q = target_.forward_batch(stack_observations(next_states));
  std::vector<double> out;
  out.reserve(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double best = next_q.col(static_cast<Eigen::Index>(j)).maxCoeff();
    out.push_back(batch[j]->reward + config_.gamma * best);
  }
  return out;
}

double DqnAgent::learn(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw StateError("dqn learn called with an empty batch");
  const auto n = static_cast<Eigen::Index>(batch.size());

  std::vector<const Observation*> states;
  states.reserve(batch.size());
  for (const Transition* t : batch) states.push_back(&t->state);

  const std::vector<double> targets = bellman_targets(batch);
  nn::Mlp::Tape tape;
  const Eigen::MatrixXd q = q_.forward(stack_observations(states), tape);

  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(q.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Transition& t = *batch[static_cast<std::size_t>(j)];
    const double residual = q(t.action, j) - targets[static_cast<std::size_t>(j)];
    loss += residual * residual;
    upstream(t.action, j) = 2.0 * residual / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (!std::isfinite(loss)) throw NumericError("dqn loss is not finite");

  optimizer_.step(q_, q_.backward(tape, upstream));
  nn::soft_update(target_, q_, config_.tau);
  return loss;
}

std::optional<double> DqnAgent::learn_from_buffer(Rng& rng) {
  if (!ready()) return std::nullopt;
  return learn(buffer_.sample(config_.batch_size, rng));
}

double DqnAgent::decay_epsilon(int episode) {
  if (episode < 0) throw ConfigError("episode index must be non-negative");
  epsilon_ = std::max(config_.epsilon_min, config_.epsilon_start * std::pow(config_.epsilon_decay, episode));
  return epsilon_;
}

nlohmann::json DqnAgent::to_json() const {
  return {{"kind", "discrete"},
          {"config", config_.to_json()},
          {"epsilon", epsilon_},
          {"q_network", nn::to_json(q_)},
          {"target_network", nn::to_json(target_)},
          {"optimizer", optimizer_.to_json()}};
}

DqnAgent DqnAgent::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "discrete") throw CheckpointError("checkpoint is not a discrete agent");
    DqnConfig config = DqnConfig::from_json(doc.at("config"));
    config.validate();
    nn::Mlp q = nn::mlp_from_json(doc.at("q_network"));
    nn::Mlp target = nn::mlp_from_json(doc.at("target_network"));
    if (q.dims() != target.dims() || q.output_dim() != kDqnActions) {
      throw CheckpointError("discrete checkpoint has inconsistent network shapes");
    }
    nn::Adam adam = nn::Adam::from_json(doc.at("optimizer"), q);
    return DqnAgent(std::move(config), std::move(q), std::move(target), std::move(adam),
                    doc.at("epsilon").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed discrete checkpoint: ") + e.what());
  }
}

}  // namespace podscale
