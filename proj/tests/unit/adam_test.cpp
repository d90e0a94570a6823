#include <gtest/gtest.h>

#include <cmath>

#include "steer/adam.hpp"

using namespace steer::num;

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Matrix> params{Matrix::Constant(1, 2, 1.0)};
  std::vector<Matrix> grads{(Matrix(1, 2) << 0.5, -3.0).finished()};
  auto state = AdamState::zeros_like(params);
  AdamHyper h;
  h.lr = 0.1;
  adam_step(params, grads, state, h, 1);
  // Bias correction makes the first update lr * g / (|g| + eps').
  EXPECT_NEAR(params[0](0, 0), 0.9, 1e-7);
  EXPECT_NEAR(params[0](0, 1), 1.1, 1e-7);
}

TEST(Adam, MatchesHandComputedSecondStep) {
  std::vector<Matrix> params{Matrix::Constant(1, 1, 0.0)};
  auto state = AdamState::zeros_like(params);
  AdamHyper h;
  h.lr = 0.01;
  const double g1 = 1.0, g2 = 2.0;
  adam_step(params, std::vector<Matrix>{Matrix::Constant(1, 1, g1)}, state, h, 1);
  adam_step(params, std::vector<Matrix>{Matrix::Constant(1, 1, g2)}, state, h, 2);
  const double m1 = 0.1 * g1, v1 = 0.001 * g1 * g1;
  const double p1 = -0.01 * (m1 / 0.1) / (std::sqrt(v1 / 0.001) + 1e-8);
  const double m2 = 0.9 * m1 + 0.1 * g2, v2 = 0.999 * v1 + 0.001 * g2 * g2;
  const double mh = m2 / (1 - 0.81), vh = v2 / (1 - 0.999 * 0.999);
  const double p2 = p1 - 0.01 * mh / (std::sqrt(vh) + 1e-8);
  EXPECT_NEAR(params[0](0, 0), p2, 1e-12);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<Matrix> params{Matrix::Constant(2, 2, 3.0)};
  auto state = AdamState::zeros_like(params);
  AdamHyper h;
  h.lr = 0.05;
  for (long t = 1; t <= 2000; ++t) {
    std::vector<Matrix> g{2.0 * params[0]};
    adam_step(params, g, state, h, t);
  }
  EXPECT_LT(params[0].cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Adam, RejectsBadInput) {
  std::vector<Matrix> params{Matrix::Zero(1, 1)};
  auto state = AdamState::zeros_like(params);
  EXPECT_THROW(adam_step(params, std::vector<Matrix>{Matrix::Zero(1, 1)}, state, {}, 0), std::invalid_argument);
  std::vector<Matrix> bad{Matrix::Constant(1, 1, std::nan(""))};
  EXPECT_ANY_THROW(adam_step(params, bad, state, {}, 1));
}

TEST(Adam, ScalarFromZero) {
  std::vector<Matrix> params{Matrix::Zero(1, 1)};
  std::vector<Matrix> grads{Matrix::Ones(1, 1)};
  auto state = AdamState::zeros_like(params);
  AdamHyper h;
  h.lr = 0.1;
  adam_step(params, grads, state, h, 1);
  EXPECT_NEAR(params[0](0, 0), -0.1, 1e-8);
}
