#include <gtest/gtest.h>

#include <cmath>

#include "podscale/error.hpp"
#include "podscale/nn.hpp"

using namespace podscale;
using namespace podscale::nn;

namespace {

// Loss used by the finite-difference checks: sum_j <c_j, f(x_j)>.
double probe_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  return (net.forward_batch(x).array() * c.array()).sum();
}

double max_relative_gradient_error(Mlp net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& c) {
  Mlp::Tape tape;
  net.forward(x, tape);
  const ParamSet grads = net.backward(tape, c);
  const double h = 1e-5;
  double worst = 0.0;
  auto visit = [&](auto& p, const auto& g) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = probe_loss(net, x, c);
      p.data()[i] = saved - h;
      const double down = probe_loss(net, x, c);
      p.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = g.data()[i];
      const double err = std::abs(numeric - analytic) / std::max(1.0, std::abs(numeric) + std::abs(analytic));
      worst = std::max(worst, err);
    }
  };
  for (std::size_t l = 0; l < net.params().size(); ++l) {
    visit(net.params()[l].weight, grads[l].weight);
    visit(net.params()[l].bias, grads[l].bias);
  }
  return worst;
}

}  // namespace

TEST(Mlp, ZeroNetworkGivesZero) {
  const Mlp net = Mlp::zeros({4, 8, 3}, OutputHead::Linear);
  EXPECT_TRUE(net.forward(Eigen::VectorXd::Ones(4)).isZero());
}

TEST(Mlp, IdentityLayer) {
  Mlp net = Mlp::zeros({3, 3}, OutputHead::Linear);
  net.params()[0].weight = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd x(Eigen::Vector3d(0.3, -2.0, 7.5));
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, GoldenForward) {
  Rng rng(20240611);
  const Mlp net({3, 4, 2}, OutputHead::Linear, rng);
  const Eigen::VectorXd y = net.forward(Eigen::Vector3d(0.5, -0.25, 1.0));
  EXPECT_NEAR(y(0), 0.15587208510440664, 1e-12);
  EXPECT_NEAR(y(1), 0.22801166068318726, 1e-12);
}

TEST(Mlp, InitBoundsAndDeterminism) {
  Rng a(1), b(1);
  const Mlp x({10, 16, 4}, OutputHead::Linear, a);
  const Mlp y({10, 16, 4}, OutputHead::Linear, b);
  EXPECT_TRUE(x == y);
  for (const auto& layer : x.params()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    EXPECT_LE(layer.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_TRUE(layer.bias.isZero());
  }
  EXPECT_EQ(x.parameter_count(), 10u * 16 + 16 + 16 * 4 + 4);
}

TEST(Mlp, TanhHeadBounded) {
  Rng rng(3);
  Mlp net({2, 8, 1}, OutputHead::Tanh, rng);
  for (auto& layer : net.params()) layer.weight *= 50.0;
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 200) * 10.0;
  const Eigen::MatrixXd y = net.forward_batch(x);
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Mlp, ShapeMismatch) {
  Rng rng(3);
  const Mlp net({2, 8, 1}, OutputHead::Linear, rng);
  EXPECT_THROW(net.forward(Eigen::VectorXd::Zero(3)), ConfigError);
  EXPECT_THROW(Mlp({2}, OutputHead::Linear, rng), ConfigError);
}

TEST(Backprop, ConstantLossGivesZeroGradient) {
  Rng rng(5);
  const Mlp net({3, 5, 2}, OutputHead::Linear, rng);
  Mlp::Tape tape;
  net.forward(Eigen::MatrixXd::Random(3, 4), tape);
  for (const auto& g : net.backward(tape, Eigen::MatrixXd::Zero(2, 4))) {
    EXPECT_TRUE(g.weight.isZero());
    EXPECT_TRUE(g.bias.isZero());
  }
}

TEST(Backprop, SingleWeightRegression) {
  Mlp net = Mlp::zeros({1, 1}, OutputHead::Linear);
  const double w = 0.7, x = 1.9, y = 3.0;
  net.params()[0].weight(0, 0) = w;
  Mlp::Tape tape;
  const Eigen::MatrixXd out = net.forward(Eigen::MatrixXd::Constant(1, 1, x), tape);
  const Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, 1, 2.0 * (out(0, 0) - y));
  const ParamSet g = net.backward(tape, upstream);
  EXPECT_NEAR(g[0].weight(0, 0), 2.0 * (w * x - y) * x, 1e-14);
}

TEST(Backprop, MatchesFiniteDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> width(1, 16);
    std::vector<int> dims{width(rng)};
    const int layers = 1 + trial % 3;
    for (int l = 0; l < layers; ++l) dims.push_back(width(rng));
    const OutputHead head = trial % 2 ? OutputHead::Tanh : OutputHead::Linear;
    const Mlp net(dims, head, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(dims.front(), 3);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Random(dims.back(), 3);
    EXPECT_LT(max_relative_gradient_error(net, x, c), 1e-4) << "trial " << trial;
  }
}

TEST(Adam, ZeroGradientKeepsParameters) {
  Rng rng(2);
  Mlp net({2, 3, 1}, OutputHead::Linear, rng);
  const Mlp before = net;
  Adam opt(net, {});
  opt.step(net, zeros_like(net.params()));
  EXPECT_TRUE(net == before);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, ConstantGradientDescends) {
  Mlp net = Mlp::zeros({1, 1}, OutputHead::Linear);
  Adam opt(net, AdamConfig{.learning_rate = 0.01});
  ParamSet g = zeros_like(net.params());
  g[0].weight(0, 0) = 1.0;
  double previous = net.params()[0].weight(0, 0);
  for (int i = 0; i < 50; ++i) {
    opt.step(net, g);
    EXPECT_LT(net.params()[0].weight(0, 0), previous);
    previous = net.params()[0].weight(0, 0);
  }
  // bias-corrected first step moves by exactly the learning rate
  Mlp fresh = Mlp::zeros({1, 1}, OutputHead::Linear);
  Adam first(fresh, AdamConfig{.learning_rate = 0.01});
  first.step(fresh, g);
  EXPECT_NEAR(fresh.params()[0].weight(0, 0), -0.01, 1e-9);
}

TEST(Adam, QuadraticBowlConverges) {
  // minimise sum (w_i - t_i)^2 over a 1-layer linear map evaluated at x = 1
  Mlp net = Mlp::zeros({1, 4}, OutputHead::Linear);
  const Eigen::Vector4d target(1.0, -2.0, 0.5, 3.0);
  Adam opt(net, AdamConfig{.learning_rate = 0.05});
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) {
    Mlp::Tape tape;
    const Eigen::MatrixXd y = net.forward(Eigen::MatrixXd::Ones(1, 1), tape);
    const Eigen::VectorXd r = y.col(0) - target;
    losses.push_back(r.squaredNorm());
    opt.step(net, net.backward(tape, 2.0 * r));
  }
  EXPECT_LT(losses.back(), 1e-3 * losses.front());
}

TEST(Adam, NonFiniteGradientAborts) {
  Mlp net = Mlp::zeros({1, 1}, OutputHead::Linear);
  Adam opt(net, {});
  ParamSet g = zeros_like(net.params());
  g[0].bias(0) = std::nan("");
  EXPECT_THROW(opt.step(net, g), NumericError);
}

TEST(SoftUpdate, IdentityElementWise) {
  Rng rng(4);
  const Mlp online({3, 5, 2}, OutputHead::Linear, rng);
  const Mlp target0({3, 5, 2}, OutputHead::Linear, rng);
  for (double tau : {0.0, 0.005, 1.0}) {
    Mlp target = target0;
    soft_update(target, online, tau);
    for (std::size_t l = 0; l < target.params().size(); ++l) {
      const Eigen::MatrixXd expected = tau * online.params()[l].weight + (1.0 - tau) * target0.params()[l].weight;
      EXPECT_EQ(target.params()[l].weight, expected);
    }
  }
  Mlp copy = target0;
  soft_update(copy, online, 1.0);
  EXPECT_TRUE(copy == online);
}

TEST(Checkpoint, NetworkAndOptimizerRoundTrip) {
  Rng rng(6);
  Mlp net({4, 6, 2}, OutputHead::Tanh, rng);
  Adam opt(net, AdamConfig{.learning_rate = 3e-4});
  Mlp::Tape tape;
  net.forward(Eigen::MatrixXd::Random(4, 5), tape);
  opt.step(net, net.backward(tape, Eigen::MatrixXd::Random(2, 5)));

  const Mlp restored = mlp_from_json(nlohmann::json::parse(to_json(net).dump()));
  EXPECT_TRUE(restored == net);
  const Adam opt2 = Adam::from_json(nlohmann::json::parse(opt.to_json().dump()), restored);
  EXPECT_EQ(opt2.steps(), 1);
  EXPECT_EQ(opt2.config().learning_rate, 3e-4);

  auto doc = to_json(net);
  doc["layers"][0]["weight"].erase(0);
  EXPECT_THROW(mlp_from_json(doc), CheckpointError);
}
