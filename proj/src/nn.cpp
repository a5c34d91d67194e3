#include "podscale/nn.hpp"

#include <cmath>
#include <string>

#include "podscale/error.hpp"

namespace podscale::nn {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ConfigError("network needs at least input and output dims");
  for (int d : dims) {
    if (d <= 0) throw ConfigError("network layer dims must be positive");
  }
}

const char* head_name(OutputHead head) { return head == OutputHead::Tanh ? "tanh" : "linear"; }

OutputHead head_from_name(const std::string& name) {
  if (name == "tanh") return OutputHead::Tanh;
  if (name == "linear") return OutputHead::Linear;
  throw CheckpointError("unknown output head '" + name + "'");
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  return flat;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto flat = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw CheckpointError("checkpoint tensor has wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++];
  }
  return m;
}

nlohmann::json params_json(const ParamSet& params) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : params) {
    layers.push_back({{"weight", matrix_json(layer.weight)}, {"bias", matrix_json(layer.bias)}});
  }
  return layers;
}

ParamSet params_from_json(const nlohmann::json& j, const ParamSet& shape) {
  if (!j.is_array() || j.size() != shape.size()) throw CheckpointError("checkpoint layer count mismatch");
  ParamSet out = shape;
  for (std::size_t l = 0; l < shape.size(); ++l) {
    out[l].weight = matrix_from_json(j[l].at("weight"), shape[l].weight.rows(), shape[l].weight.cols());
    out[l].bias = matrix_from_json(j[l].at("bias"), shape[l].bias.rows(), 1);
  }
  return out;
}

}  // namespace

Mlp::Mlp(std::vector<int> dims, OutputHead head, Rng& rng) : Mlp(zeros(std::move(dims), head)) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    std::uniform_real_distribution<double> init(-bound, bound);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = init(rng);
    }
  }
}

Mlp Mlp::zeros(std::vector<int> dims, OutputHead head) {
  check_dims(dims);
  Mlp net;
  net.dims_ = std::move(dims);
  net.head_ = head;
  for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l) {
    net.layers_.push_back({Eigen::MatrixXd::Zero(net.dims_[l + 1], net.dims_[l]),
                           Eigen::VectorXd::Zero(net.dims_[l + 1])});
  }
  return net;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (rows != input_dim()) {
    throw ConfigError("network input has " + std::to_string(rows) + " rows, expected " +
                      std::to_string(input_dim()));
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward_batch(input);
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  check_input(inputs.rows());
  Eigen::MatrixXd x = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      x = z.cwiseMax(0.0);
    } else if (head_ == OutputHead::Tanh) {
      x = z.array().tanh().matrix();
    } else {
      x = std::move(z);
    }
  }
  return x;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, Tape& tape) const {
  check_input(inputs.rows());
  tape.activations.clear();
  tape.activations.reserve(layers_.size() + 1);
  tape.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * tape.activations.back();
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      tape.activations.push_back(z.cwiseMax(0.0));
    } else if (head_ == OutputHead::Tanh) {
      tape.activations.push_back(z.array().tanh().matrix());
    } else {
      tape.activations.push_back(std::move(z));
    }
  }
  return tape.activations.back();
}

ParamSet Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream) const {
  if (tape.activations.size() != layers_.size() + 1) throw ConfigError("tape does not match network");
  const Eigen::MatrixXd& out = tape.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw ConfigError("upstream gradient shape does not match network output");
  }
  ParamSet grads(layers_.size());
  Eigen::MatrixXd delta = upstream;
  if (head_ == OutputHead::Tanh) {
    delta = delta.cwiseProduct((1.0 - out.array().square()).matrix());
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd& input = tape.activations[l];
    grads[l].weight = delta * input.transpose();
    grads[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
    // ReLU derivative from the post-activation value.
    delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  return n;
}

bool Mlp::all_finite() const { return nn::all_finite(layers_); }

bool operator==(const Mlp& a, const Mlp& b) {
  if (a.dims_ != b.dims_ || a.head_ != b.head_) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

ParamSet zeros_like(const ParamSet& params) {
  ParamSet out;
  out.reserve(params.size());
  for (const auto& layer : params) {
    out.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                   Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

bool all_finite(const ParamSet& params) {
  for (const auto& layer : params) {
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

Adam::Adam(const Mlp& net, AdamConfig config)
    : config_(config), first_(zeros_like(net.params())), second_(zeros_like(net.params())) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void Adam::step(Mlp& net, const ParamSet& grads) {
  if (grads.size() != first_.size()) throw ConfigError("gradient layer count mismatch");
  if (!all_finite(grads)) throw NumericError("non-finite gradient; aborting training");
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& layer = net.params()[l];
    if (grads[l].weight.rows() != layer.weight.rows() || grads[l].weight.cols() != layer.weight.cols()) {
      throw ConfigError("gradient shape mismatch");
    }
    update(layer.weight, first_[l].weight, second_[l].weight, grads[l].weight);
    update(layer.bias, first_[l].bias, second_[l].bias, grads[l].bias);
  }
}

nlohmann::json Adam::to_json() const {
  return {{"learning_rate", config_.learning_rate},
          {"beta1", config_.beta1},
          {"beta2", config_.beta2},
          {"epsilon", config_.epsilon},
          {"steps", steps_},
          {"first_moment", params_json(first_)},
          {"second_moment", params_json(second_)}};
}

Adam Adam::from_json(const nlohmann::json& doc, const Mlp& net) {
  AdamConfig config;
  config.learning_rate = doc.at("learning_rate").get<double>();
  config.beta1 = doc.at("beta1").get<double>();
  config.beta2 = doc.at("beta2").get<double>();
  config.epsilon = doc.at("epsilon").get<double>();
  Adam adam(net, config);
  adam.steps_ = doc.at("steps").get<std::int64_t>();
  adam.first_ = params_from_json(doc.at("first_moment"), net.params());
  adam.second_ = params_from_json(doc.at("second_moment"), net.params());
  return adam;
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.dims() != online.dims()) throw ConfigError("soft update between different shapes");
  for (std::size_t l = 0; l < online.params().size(); ++l) {
    auto& t = target.params()[l];
    const auto& o = online.params()[l];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

nlohmann::json to_json(const Mlp& net) {
  return {{"layer_dims", net.dims()}, {"head", head_name(net.head())}, {"layers", params_json(net.params())}};
}

Mlp mlp_from_json(const nlohmann::json& doc) {
  try {
    Mlp net = Mlp::zeros(doc.at("layer_dims").get<std::vector<int>>(),
                         head_from_name(doc.at("head").get<std::string>()));
    net.params() = params_from_json(doc.at("layers"), net.params());
    if (!net.all_finite()) throw CheckpointError("checkpoint contains non-finite weights");
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed network checkpoint: ") + e.what());
  }
}

}  // namespace podscale::nn
