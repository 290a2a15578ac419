#include <gtest/gtest.h>

#include <cmath>

#include "samra/mlp.hpp"
#include "samra/replay_buffer.hpp"
#include "samra/rng.hpp"

using namespace samra;
using namespace samra::marl;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

double weighted_sum(const Mlp& net, const Matrix& x, const Matrix& up) {
  return (net.forward(x).array() * up.array()).sum();
}

}  // namespace

TEST(Mlp, ShapesAndInitRange) {
  Rng rng(1);
  Mlp net({5, 7, 3}, Activation::kRelu, Activation::kTanh, rng);
  EXPECT_EQ(net.input_size(), 5);
  EXPECT_EQ(net.output_size(), 3);
  EXPECT_EQ(net.parameter_count(), 5u * 7 + 7 + 7 * 3 + 3);
  const double bound = 1.0 / std::sqrt(5.0);
  EXPECT_LE(net.layers()[0].weight.cwiseAbs().maxCoeff(), bound);
  const Matrix y = net.forward(random_matrix(5, 4, rng));
  EXPECT_EQ(y.rows(), 3);
  EXPECT_EQ(y.cols(), 4);
  EXPECT_LE(y.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW((void)net.forward(Matrix(4, 2)), std::invalid_argument);
}

TEST(Mlp, LinearLayerGradient) {
  Mlp net({3, 2}, Activation::kIdentity, Activation::kIdentity);
  net.layers()[0].weight << 1, 2, 3, 4, 5, 6;
  net.layers()[0].bias << 0.5, -0.5;
  Matrix x(3, 1);
  x << 1, -1, 2;
  Matrix up(2, 1);
  up << 0.3, -0.7;
  Mlp::Trace tr;
  (void)net.forward(x, tr);
  const auto g = net.backward(tr, up);
  const Matrix expected_input = net.layers()[0].weight.transpose() * up;
  EXPECT_TRUE(g.input.isApprox(expected_input, 1e-15));
  EXPECT_TRUE(g.layers[0].weight.isApprox(up * x.transpose(), 1e-15));
  EXPECT_TRUE(g.layers[0].bias.isApprox(up.col(0), 1e-15));
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  for (auto act : {Activation::kTanh, Activation::kRelu}) {
    Rng rng(11);
    Mlp net({4, 6, 5, 2}, act, Activation::kTanh, rng);
    const Matrix x = random_matrix(4, 3, rng);
    const Matrix up = random_matrix(2, 3, rng);
    Mlp::Trace tr;
    (void)net.forward(x, tr);
    const auto g = net.backward(tr, up);
    const Vector analytic = g.flat();
    Vector params = net.flat_parameters();
    ASSERT_EQ(analytic.size(), params.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      Vector p = params;
      p[i] += h;
      net.set_flat_parameters(p);
      const double f_plus = weighted_sum(net, x, up);
      p[i] -= 2 * h;
      net.set_flat_parameters(p);
      const double f_minus = weighted_sum(net, x, up);
      const double numeric = (f_plus - f_minus) / (2 * h);
      ASSERT_NEAR(analytic[i], numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << i;
    }
    net.set_flat_parameters(params);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        Matrix xp = x, xm = x;
        xp(r, c) += h;
        xm(r, c) -= h;
        const double numeric = (weighted_sum(net, xp, up) - weighted_sum(net, xm, up)) / (2 * h);
        ASSERT_NEAR(g.input(r, c), numeric, 1e-6);
      }
    }
  }
}

TEST(Mlp, FlatRoundTrip) {
  Rng rng(2);
  Mlp a({3, 4, 2}, Activation::kRelu, Activation::kIdentity, rng);
  Mlp b({3, 4, 2}, Activation::kRelu, Activation::kIdentity);
  b.set_flat_parameters(a.flat_parameters());
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  EXPECT_THROW(b.set_flat_parameters(Vector::Zero(3)), std::invalid_argument);
}

TEST(SoftUpdate, Example) {
  Mlp target({1, 1}, Activation::kIdentity, Activation::kIdentity);
  Mlp main({1, 1}, Activation::kIdentity, Activation::kIdentity);
  main.layers()[0].weight(0, 0) = 1.0;
  soft_update(target, main, 0.005);
  EXPECT_NEAR(target.layers()[0].weight(0, 0), 0.005, 1e-15);
  soft_update(target, main, 1.0);
  EXPECT_EQ(target.flat_parameters(), main.flat_parameters());
  EXPECT_THROW(soft_update(target, main, 0.0), std::invalid_argument);
  EXPECT_THROW(soft_update(target, main, 1.5), std::invalid_argument);
  Mlp other({2, 1}, Activation::kIdentity, Activation::kIdentity);
  EXPECT_THROW(soft_update(other, main, 0.5), std::invalid_argument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Mlp net({1, 1}, Activation::kIdentity, Activation::kIdentity);
  Adam opt(net, 0.01);
  MlpGradients g;
  g.layers.push_back(DenseLayer{Matrix::Constant(1, 1, 3.0), Vector::Constant(1, -2.0)});
  opt.step(net, g);
  EXPECT_NEAR(net.layers()[0].weight(0, 0), -0.01, 1e-9);
  EXPECT_NEAR(net.layers()[0].bias(0), 0.01, 1e-9);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, ZeroLearningRateLeavesParameters) {
  Rng rng(4);
  Mlp net({2, 3, 1}, Activation::kTanh, Activation::kIdentity, rng);
  const Vector before = net.flat_parameters();
  Adam opt(net, 0.0);
  Mlp::Trace tr;
  (void)net.forward(random_matrix(2, 5, rng), tr);
  opt.step(net, net.backward(tr, Matrix::Ones(1, 5)));
  EXPECT_EQ(net.flat_parameters(), before);
}

TEST(ReplayBuffer, FifoEvictionAndSampling) {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    buf.push(TransitionRecord{{double(i)}, {0.0}, {1.0}, double(i), {double(i + 1)}, i == 4});
  }
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.oldest(0).state[0], 2.0);
  EXPECT_EQ(buf.oldest(2).state[0], 4.0);
  Rng rng(7);
  const auto batch = buf.sample(16, rng);
  EXPECT_EQ(batch.size(), 16);
  for (Eigen::Index c = 0; c < batch.size(); ++c) {
    EXPECT_GE(batch.states(0, c), 2.0);
    EXPECT_EQ(batch.global_rewards(0, c), batch.states(0, c));
    EXPECT_EQ(batch.not_terminal(0, c), batch.states(0, c) == 4.0 ? 0.0 : 1.0);
  }
}
