#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "podscale/rng.hpp"

namespace podscale::nn {

enum class OutputHead { Linear, Tanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Weights or gradients, one entry per layer.
using ParamSet = std::vector<DenseLayer>;

// Dense feed-forward network: ReLU on hidden layers, linear or tanh output.
// Batched calls take one sample per column.
class Mlp {
 public:
  struct Tape {
    // activations[0] is the input; activations[l + 1] is layer l's output.
    std::vector<Eigen::MatrixXd> activations;
  };

  Mlp() = default;
  // Fan-in scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero bias.
  Mlp(std::vector<int> dims, OutputHead head, Rng& rng);
  static Mlp zeros(std::vector<int> dims, OutputHead head);

  const std::vector<int>& dims() const { return dims_; }
  OutputHead head() const { return head_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Tape& tape) const;

  // Gradients of sum_j <upstream_j, output_j> with respect to every parameter,
  // i.e. upstream holds dLoss/dOutput per sample and the result is summed
  // over the batch.
  ParamSet backward(const Tape& tape, const Eigen::MatrixXd& upstream) const;

  ParamSet& params() { return layers_; }
  const ParamSet& params() const { return layers_; }
  std::size_t parameter_count() const;
  bool all_finite() const;

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<int> dims_;
  OutputHead head_ = OutputHead::Linear;
  ParamSet layers_;
};

ParamSet zeros_like(const ParamSet& params);
bool all_finite(const ParamSet& params);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment optimizer with bias correction. Throws NumericError on
// non-finite gradients.
class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig config);

  void step(Mlp& net, const ParamSet& grads);
  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& doc, const Mlp& net);

 private:
  AdamConfig config_;
  ParamSet first_;
  ParamSet second_;
  std::int64_t steps_ = 0;
};

// target <- tau * online + (1 - tau) * target, element-wise.
void soft_update(Mlp& target, const Mlp& online, double tau);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace podscale::nn
