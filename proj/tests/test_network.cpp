#include <gtest/gtest.h>

#include <cmath>

#include "dvae/distributions.hpp"
#include "dvae/network.hpp"
#include "dvae/oracle.hpp"

using namespace dvae;

namespace {

MatrixX random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  MatrixX m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2.0 * rng.uniform() - 1.0);
  return m;
}

Mlp random_net(const std::vector<Eigen::Index>& extents, Head head, Eigen::Index rows, Rng& rng) {
  Mlp net(extents, head, rows);
  net.initialize(rng);
  for (auto& layer : net.layers()) layer.bias = random_matrix(layer.outputs(), 1, rng, 0.5);
  return net;
}

void expect_close_gradients(const VectorX& analytic, const VectorX& numeric) {
  ASSERT_EQ(analytic.size(), numeric.size());
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic(i) - numeric(i));
    if (diff <= 1e-8) continue;
    EXPECT_LE(diff / std::max(std::abs(analytic(i)), std::abs(numeric(i))), 1e-4)
        << "parameter " << i << ": analytic " << analytic(i) << " numeric " << numeric(i);
  }
}

}  // namespace

TEST(MlpForward, ZeroSigmoidNetOutputsHalf) {
  Mlp net({5, 7, 3}, Head::kSigmoid);
  const MatrixX out = net.forward(MatrixX(MatrixX::Ones(2, 5)));
  EXPECT_EQ(out, MatrixX::Constant(2, 3, 0.5));
}

TEST(MlpForward, ZeroSoftmaxNetOutputsUniformRows) {
  Mlp net({5, 7, 12}, Head::kSoftmax, 3);
  const VectorX out = net.forward(VectorX(VectorX::Ones(5)));
  for (Eigen::Index i = 0; i < out.size(); ++i) EXPECT_NEAR(out(i), 0.25, 1e-15);
}

TEST(MlpForward, IdentityLayerThenSigmoid) {
  Mlp net({2, 2}, Head::kSigmoid);
  net.layers()[0].weights = MatrixX::Identity(2, 2);
  VectorX x(2);
  x << 0.0, std::log(3.0);
  const VectorX out = net.forward(x);
  EXPECT_NEAR(out(0), 0.5, 1e-15);
  EXPECT_NEAR(out(1), 0.75, 1e-15);
}

TEST(MlpForward, DimensionMismatch) {
  Mlp net({3, 2}, Head::kSigmoid);
  EXPECT_THROW(net.forward(MatrixX(MatrixX::Zero(1, 4))), DimensionError);
}

TEST(Mlp, RejectsIndivisibleSoftmaxWidth) {
  EXPECT_THROW(Mlp({3, 7}, Head::kSoftmax, 2), ConfigError);
}

TEST(MlpBackward, BeforeForwardIsStateError) {
  Mlp net({3, 2}, Head::kSigmoid);
  EXPECT_THROW(net.backward(MatrixX::Zero(1, 2)), StateError);
}

TEST(MlpBackward, ZeroUpstreamLeavesAccumulators) {
  Rng rng(1);
  Mlp net = random_net({4, 5, 3}, Head::kSigmoid, 1, rng);
  net.forward(random_matrix(2, 4, rng));
  net.backward(random_matrix(2, 3, rng));
  const VectorX before = net.gradients();
  net.backward(MatrixX::Zero(2, 3));
  EXPECT_EQ(net.gradients(), before);
}

TEST(MlpBackward, LinearChainRule) {
  // Loss = c . logits for a single affine layer: dW = c x^T, db = c.
  Rng rng(2);
  Mlp net = random_net({4, 3}, Head::kSigmoid, 1, rng);
  const MatrixX x = random_matrix(1, 4, rng);
  const MatrixX c = random_matrix(1, 3, rng);
  net.forward(x);
  const MatrixX grad_input = net.backward_logits(c);
  const auto& layer = net.layers()[0];
  EXPECT_LE((layer.grad_weights - c.transpose() * x).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((layer.grad_bias - c.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((grad_input - c * layer.weights).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MlpBackward, SigmoidHeadMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net = random_net({5, 8, 4}, Head::kSigmoid, 1, rng);
    const MatrixX x = random_matrix(1, 5, rng);
    VectorX target(4);
    for (int i = 0; i < 4; ++i) target(i) = rng.uniform() < 0.5 ? 0.0 : 1.0;

    const MatrixX out = net.forward(x);
    MatrixX upstream(1, 4);  // d(-BCE)/d output
    for (int i = 0; i < 4; ++i) {
      upstream(0, i) = target(i) / out(0, i) - (1.0 - target(i)) / (1.0 - out(0, i));
    }
    net.zero_grads();
    net.backward(upstream);
    const VectorX analytic = net.gradients();

    const VectorX params = net.parameters();
    auto objective = [&](const VectorX& p) {
      net.set_parameters(p);
      return -aggregate_bce(net.forward(x).row(0), target);
    };
    expect_close_gradients(analytic, finite_difference(objective, params, 1e-5));
  }
}

TEST(MlpBackward, SoftmaxHeadMatchesFiniteDifferences) {
  // Objective: aggregate entropy plus a fixed linear functional of the probabilities.
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net = random_net({5, 8, 6}, Head::kSoftmax, 2, rng);
    const MatrixX x = random_matrix(1, 5, rng);
    const MatrixX weights = random_matrix(1, 6, rng);
    auto value = [&](const MatrixX& p) {
      return aggregate_entropy(Eigen::Map<const MatrixX>(p.data(), 2, 3)) + weights.cwiseProduct(p).sum();
    };

    const MatrixX out = net.forward(x);
    MatrixX upstream(1, 6);
    for (int i = 0; i < 6; ++i) upstream(0, i) = -(std::log(out(0, i)) + 1.0) + weights(0, i);
    net.zero_grads();
    net.backward(upstream);
    const VectorX analytic = net.gradients();

    const VectorX params = net.parameters();
    auto objective = [&](const VectorX& p) {
      net.set_parameters(p);
      return value(net.forward(x));
    };
    expect_close_gradients(analytic, finite_difference(objective, params, 1e-5));
  }
}

TEST(MlpBackward, InputGradientMatchesFiniteDifferences) {
  Rng rng(5);
  Mlp net = random_net({4, 6, 3}, Head::kSigmoid, 1, rng);
  const VectorX x = random_matrix(4, 1, rng);
  const MatrixX c = random_matrix(1, 3, rng);
  net.forward(MatrixX(x.transpose()));
  const VectorX analytic = net.backward(c).row(0).transpose();
  auto objective = [&](const VectorX& input) { return c.row(0).dot(net.forward(input)); };
  expect_close_gradients(analytic, finite_difference(objective, x, 1e-5));
}

TEST(MlpBackward, AccumulationIsLinearInUpstream) {
  Rng rng(6);
  Mlp net = random_net({4, 6, 3}, Head::kSigmoid, 1, rng);
  net.forward(random_matrix(3, 4, rng));
  const MatrixX a = random_matrix(3, 3, rng);
  const MatrixX b = random_matrix(3, 3, rng);
  net.zero_grads();
  net.backward(a + b);
  const VectorX together = net.gradients();
  net.zero_grads();
  net.backward(a);
  net.backward(b);
  EXPECT_LE((together - net.gradients()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MlpZeroGrads, ClearsAndIsIdempotent) {
  Rng rng(7);
  Mlp net = random_net({4, 6, 3}, Head::kSigmoid, 1, rng);
  net.forward(random_matrix(2, 4, rng));
  const MatrixX upstream = random_matrix(2, 3, rng);
  net.backward(upstream);
  const VectorX single = net.gradients();
  net.zero_grads();
  EXPECT_EQ(net.gradients(), VectorX::Zero(single.size()));
  net.zero_grads();
  EXPECT_EQ(net.gradients(), VectorX::Zero(single.size()));
  // Replaying backward on the cached forward reproduces the first pass exactly.
  net.backward(upstream);
  EXPECT_EQ(net.gradients(), single);
}

TEST(MlpSgaStep, ZeroGradsLeaveParameters) {
  Rng rng(8);
  Mlp net = random_net({3, 4, 2}, Head::kSigmoid, 1, rng);
  const VectorX before = net.parameters();
  net.sga_step(0.1);
  EXPECT_EQ(net.parameters(), before);
}

TEST(MlpSgaStep, AscendsAlongGradient) {
  Mlp net({1, 1}, Head::kSigmoid);
  net.layers()[0].weights(0, 0) = 2.0;
  net.layers()[0].grad_weights(0, 0) = 0.25;
  net.sga_step(1.0);
  EXPECT_EQ(net.layers()[0].weights(0, 0), 2.25);
}

TEST(MlpSgaStep, TwoHalfStepsEqualOneFullStep) {
  Rng rng(9);
  Mlp a = random_net({3, 4, 2}, Head::kSigmoid, 1, rng);
  a.forward(random_matrix(2, 3, rng));
  a.backward(random_matrix(2, 2, rng));
  Mlp b = a;
  a.sga_step(0.5);
  a.sga_step(0.5);
  b.sga_step(1.0);
  EXPECT_LE((a.parameters() - b.parameters()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MlpSgaStep, RejectsNonpositiveRate) {
  Mlp net({1, 1}, Head::kSigmoid);
  EXPECT_THROW(net.sga_step(0.0), ConfigError);
  EXPECT_THROW(net.sga_step(-1.0), ConfigError);
}

TEST(Mlp, InitializationIsSeededAndBounded) {
  Rng r1(10), r2(10);
  Mlp a({6, 10, 4}, Head::kSigmoid), b({6, 10, 4}, Head::kSigmoid);
  a.initialize(r1);
  b.initialize(r2);
  EXPECT_EQ(a.parameters(), b.parameters());
  const double limit = std::sqrt(6.0 / 16.0);
  EXPECT_LE(a.layers()[0].weights.cwiseAbs().maxCoeff(), limit);
  EXPECT_EQ(a.layers()[0].bias, VectorX::Zero(10));
}

TEST(Mlp, FlatParameterRoundTrip) {
  Rng rng(11);
  Mlp net = random_net({3, 4, 2}, Head::kSigmoid, 1, rng);
  const VectorX p = net.parameters();
  EXPECT_EQ(p.size(), static_cast<Eigen::Index>(3 * 4 + 4 + 4 * 2 + 2));
  Mlp other({3, 4, 2}, Head::kSigmoid);
  other.set_parameters(p);
  EXPECT_EQ(other.parameters(), p);
  EXPECT_THROW(other.set_parameters(VectorX::Zero(3)), DimensionError);
}
