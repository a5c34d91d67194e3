#include "podscale/ppo_agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "podscale/error.hpp"

namespace podscale {

void PpoConfig::validate() const {
  if (actor_hidden.empty() || critic_hidden.empty()) throw ConfigError("ppo networks need hidden layers");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo gamma must be in [0, 1]");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("ppo clip range must be in (0, 1)");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo entropy coefficient must be non-negative");
  if (update_epochs <= 0) throw ConfigError("ppo update epochs must be positive");
  if (batch_threshold == 0) throw ConfigError("ppo batch threshold must be positive");
  if (!(stddev_min > 0.0 && stddev_min <= stddev_start)) throw ConfigError("ppo stddev bounds invalid");
  if (!(stddev_decay > 0.0 && stddev_decay <= 1.0)) throw ConfigError("ppo stddev decay must be in (0, 1]");
  if (delta_max_mc <= 0) throw ConfigError("ppo delta_max_mc must be positive");
}

nlohmann::json PpoConfig::to_json() const {
  return {{"actor_hidden", actor_hidden},
          {"critic_hidden", critic_hidden},
          {"actor_learning_rate", actor_learning_rate},
          {"critic_learning_rate", critic_learning_rate},
          {"gamma", gamma},
          {"clip_epsilon", clip_epsilon},
          {"entropy_coef", entropy_coef},
          {"update_epochs", update_epochs},
          {"batch_threshold", batch_threshold},
          {"stddev_start", stddev_start},
          {"stddev_decay", stddev_decay},
          {"stddev_min", stddev_min},
          {"delta_max_mc", delta_max_mc},
          {"bootstrap_truncated", bootstrap_truncated},
          {"normalize_advantages", normalize_advantages}};
}

PpoConfig PpoConfig::from_json(const nlohmann::json& doc) {
  PpoConfig c;
  c.actor_hidden = doc.at("actor_hidden").get<std::vector<int>>();
  c.critic_hidden = doc.at("critic_hidden").get<std::vector<int>>();
  c.actor_learning_rate = doc.at("actor_learning_rate").get<double>();
  c.critic_learning_rate = doc.at("critic_learning_rate").get<double>();
  c.gamma = doc.at("gamma").get<double>();
  c.clip_epsilon = doc.at("clip_epsilon").get<double>();
  c.entropy_coef = doc.at("entropy_coef").get<double>();
  c.update_epochs = doc.at("update_epochs").get<int>();
  c.batch_threshold = doc.at("batch_threshold").get<std::size_t>();
  c.stddev_start = doc.at("stddev_start").get<double>();
  c.stddev_decay = doc.at("stddev_decay").get<double>();
  c.stddev_min = doc.at("stddev_min").get<double>();
  c.delta_max_mc = doc.at("delta_max_mc").get<Millicores>();
  c.bootstrap_truncated = doc.at("bootstrap_truncated").get<bool>();
  c.normalize_advantages = doc.at("normalize_advantages").get<bool>();
  return c;
}

double gaussian_log_prob(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return -0.5 * z * z - std::log(stddev) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double gaussian_entropy(double stddev) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * stddev * stddev);
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

Millicores continuous_action_delta(double action, Millicores delta_max_mc) {
  return static_cast<Millicores>(std::llround(std::clamp(action, -1.0, 1.0) * static_cast<double>(delta_max_mc)));
}

AdvantageEstimate compute_advantages(const std::vector<RolloutRecord>& buffer, const nn::Mlp& critic,
                                     double gamma, bool bootstrap_truncated) {
  if (buffer.empty()) throw StateError("advantage estimation on an empty rollout");
  std::vector<const Observation*> states;
  states.reserve(buffer.size());
  for (const auto& r : buffer) states.push_back(&r.state);
  const Eigen::MatrixXd values = critic.forward_batch(stack_observations(states));

  AdvantageEstimate out;
  out.returns.assign(buffer.size(), 0.0);
  out.advantages.assign(buffer.size(), 0.0);
  double running = 0.0;
  for (std::size_t i = buffer.size(); i-- > 0;) {
    const RolloutRecord& r = buffer[i];
    const bool boundary = r.episode_end || i + 1 == buffer.size();
    if (boundary) {
      running = bootstrap_truncated ? critic.forward(r.next_state.vector())(0) : 0.0;
    }
    running = r.reward + gamma * running;
    out.returns[i] = running;
    out.advantages[i] = running - values(0, static_cast<Eigen::Index>(i));
  }
  return out;
}

namespace {

std::vector<int> with_io(int input_dim, const std::vector<int>& hidden) {
  std::vector<int> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return dims;
}

}  // namespace

PpoAgent::PpoAgent(int input_dim, PpoConfig config, Rng& init_rng) : config_(std::move(config)) {
  config_.validate();
  actor_ = nn::Mlp(with_io(input_dim, config_.actor_hidden), nn::OutputHead::Tanh, init_rng);
  critic_ = nn::Mlp(with_io(input_dim, config_.critic_hidden), nn::OutputHead::Linear, init_rng);
  actor_opt_ = nn::Adam(actor_, nn::AdamConfig{.learning_rate = config_.actor_learning_rate});
  critic_opt_ = nn::Adam(critic_, nn::AdamConfig{.learning_rate = config_.critic_learning_rate});
  stddev_ = config_.stddev_start;
}

double PpoAgent::mean_action(const Observation& obs) const { return actor_.forward(obs.vector())(0); }

double PpoAgent::value(const Observation& obs) const { return critic_.forward(obs.vector())(0); }

ActionSample PpoAgent::sample_action(const Observation& obs, bool explore, Rng& rng) const {
  const double mean = mean_action(obs);
  ActionSample s;
  s.raw_action = mean;
  if (explore) {
    std::normal_distribution<double> z(0.0, 1.0);
    s.raw_action = mean + stddev_ * z(rng);
  }
  s.action = std::clamp(s.raw_action, -1.0, 1.0);
  s.log_prob = gaussian_log_prob(s.raw_action, mean, stddev_);
  return s;
}

void PpoAgent::mark_episode_end() {
  if (!buffer_.empty()) buffer_.back().episode_end = true;
}

void PpoAgent::set_stddev(double s) {
  if (!(s > 0.0)) throw ConfigError("policy stddev must be positive");
  stddev_ = s;
}

double PpoAgent::decay_stddev(int episode) {
  if (episode < 0) throw ConfigError("episode index must be non-negative");
  stddev_ = std::max(config_.stddev_min, config_.stddev_start * std::pow(config_.stddev_decay, episode));
  return stddev_;
}

std::optional<PpoLosses> PpoAgent::update() {
  if (!ready()) return std::nullopt;
  PpoLosses losses = run_update();
  buffer_.clear();
  return losses;
}

PpoLosses PpoAgent::run_update() {
  const std::size_t n = buffer_.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  AdvantageEstimate est = compute_advantages(buffer_, critic_, config_.gamma, config_.bootstrap_truncated);

  std::vector<double> adv = est.advantages;
  if (config_.normalize_advantages && n > 1) {
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean *= inv_n;
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var * inv_n);
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  std::vector<const Observation*> states;
  states.reserve(n);
  for (const auto& r : buffer_) states.push_back(&r.state);
  const Eigen::MatrixXd inputs = stack_observations(states);
  const auto cols = static_cast<Eigen::Index>(n);
  const double var = stddev_ * stddev_;
  const double entropy = gaussian_entropy(stddev_);

  PpoLosses losses;
  for (int epoch = 0; epoch < config_.update_epochs; ++epoch) {
    nn::Mlp::Tape tape;
    const Eigen::MatrixXd mean = actor_.forward(inputs, tape);
    Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(1, cols);
    double surrogate = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const RolloutRecord& r = buffer_[static_cast<std::size_t>(j)];
      const double a = adv[static_cast<std::size_t>(j)];
      const double ratio = std::exp(gaussian_log_prob(r.raw_action, mean(0, j), stddev_) - r.log_prob);
      const double unclipped = ratio * a;
      const double term = clipped_surrogate(ratio, a, config_.clip_epsilon);
      surrogate += term;
      // Gradient only flows where the unclipped branch is the active minimum.
      if (unclipped <= term) {
        const double dlogp_dmean = (r.raw_action - mean(0, j)) / var;
        upstream(0, j) = -inv_n * a * ratio * dlogp_dmean;
      }
    }
    // The policy stddev is scheduled, not learned, so the entropy bonus
    // contributes to the loss value but has no parameter gradient.
    losses.actor = -(surrogate * inv_n) - config_.entropy_coef * entropy;
    if (!std::isfinite(losses.actor)) throw NumericError("ppo actor loss is not finite");
    actor_opt_.step(actor_, actor_.backward(tape, upstream));

    nn::Mlp::Tape critic_tape;
    const Eigen::MatrixXd values = critic_.forward(inputs, critic_tape);
    Eigen::MatrixXd critic_up(1, cols);
    double mse = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double diff = values(0, j) - est.returns[static_cast<std::size_t>(j)];
      mse += diff * diff;
      critic_up(0, j) = 2.0 * diff * inv_n;
    }
    losses.critic = mse * inv_n;
    if (!std::isfinite(losses.critic)) throw NumericError("ppo critic loss is not finite");
    critic_opt_.step(critic_, critic_.backward(critic_tape, critic_up));
  }
  return losses;
}

nlohmann::json PpoAgent::to_json() const {
  return {{"kind", "continuous"},
          {"config", config_.to_json()},
          {"stddev", stddev_},
          {"actor", nn::to_json(actor_)},
          {"critic", nn::to_json(critic_)},
          {"actor_optimizer", actor_opt_.to_json()},
          {"critic_optimizer", critic_opt_.to_json()}};
}

PpoAgent PpoAgent::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "continuous") throw CheckpointError("checkpoint is not a continuous agent");
    PpoAgent agent;
    agent.config_ = PpoConfig::from_json(doc.at("config"));
    agent.config_.validate();
    agent.actor_ = nn::mlp_from_json(doc.at("actor"));
    agent.critic_ = nn::mlp_from_json(doc.at("critic"));
    if (agent.actor_.input_dim() != agent.critic_.input_dim() || agent.actor_.output_dim() != 1 ||
        agent.critic_.output_dim() != 1 || agent.actor_.head() != nn::OutputHead::Tanh) {
      throw CheckpointError("continuous checkpoint has inconsistent network shapes");
    }
    agent.actor_opt_ = nn::Adam::from_json(doc.at("actor_optimizer"), agent.actor_);
    agent.critic_opt_ = nn::Adam::from_json(doc.at("critic_optimizer"), agent.critic_);
    agent.set_stddev(doc.at("stddev").get<double>());
    return agent;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed continuous checkpoint: ") + e.what());
  }
}

}  // namespace podscale
