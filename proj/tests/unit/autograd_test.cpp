#include <gtest/gtest.h>

#include <cmath>

#include "steer/grad_check.hpp"
#include "steer/transformer.hpp"
#include "test_support.hpp"

using namespace steer::num;
using steer::Rng;
using steer::fixture::random_matrix;

namespace {

// Weighted sum keeps gradients O(1) so relative errors are meaningful.
Tensor weighted(Tape& t, const Tensor& x, std::uint64_t seed) {
  Rng r(seed, 99);
  return sum(mul(x, t.constant(random_matrix(x.rows(), x.cols(), r))));
}

void expect_passes(const TapedFunction& f, const std::vector<Matrix>& point) {
  const auto report = grad_check(f, point, 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << "max relative error " << report.max_relative_error << " at input " << report.worst_input
                           << " (" << report.worst_row << ", " << report.worst_col << ")";
  EXPECT_GT(report.coordinates, 0u);
}

}  // namespace

TEST(Autograd, ElementwiseAndMatmul) {
  Rng r(1);
  const std::vector<Matrix> p{random_matrix(3, 4, r), random_matrix(4, 5, r), random_matrix(3, 5, r)};
  expect_passes(
      [](Tape& t, const std::vector<Tensor>& x) {
        return weighted(t, scale(add(mul(matmul(x[0], x[1]), x[2]), x[2]), 0.7), 1);
      },
      p);
}

TEST(Autograd, Embedding) {
  Rng r(2);
  const std::vector<int> ids{3, 0, 3, 5};
  expect_passes([&](Tape& t, const std::vector<Tensor>& x) { return weighted(t, embedding(x[0], ids), 2); },
                {random_matrix(6, 4, r)});
}

TEST(Autograd, CausalAttention) {
  Rng r(3);
  const std::vector<Matrix> p{random_matrix(5, 8, r), random_matrix(5, 8, r), random_matrix(5, 8, r)};
  expect_passes(
      [](Tape& t, const std::vector<Tensor>& x) { return weighted(t, causal_attention(x[0], x[1], x[2], 2), 3); }, p);
}

TEST(Autograd, Rope) {
  Rng r(4);
  expect_passes([](Tape& t, const std::vector<Tensor>& x) { return weighted(t, rope(x[0], 2, 3), 4); },
                {random_matrix(4, 8, r)});
}

TEST(Autograd, RmsNorm) {
  Rng r(5);
  expect_passes([](Tape& t, const std::vector<Tensor>& x) { return weighted(t, rms_norm(x[0], x[1]), 5); },
                {random_matrix(4, 6, r), random_matrix(1, 6, r)});
}

TEST(Autograd, GeluAndSoftmax) {
  Rng r(6);
  expect_passes([](Tape& t, const std::vector<Tensor>& x) { return weighted(t, softmax(gelu(x[0])), 6); },
                {random_matrix(3, 7, r)});
}

TEST(Autograd, CrossEntropyWithIgnoredTargets) {
  Rng r(7);
  const std::vector<int> targets{2, -1, 0, 4};
  expect_passes([&](Tape&, const std::vector<Tensor>& x) { return cross_entropy(x[0], targets); },
                {random_matrix(4, 5, r)});
}

TEST(Autograd, L2Norm) {
  Rng r(8);
  expect_passes([](Tape& t, const std::vector<Tensor>& x) { return weighted(t, l2_norm(x[0]), 8); },
                {random_matrix(3, 5, r)});
}

TEST(Autograd, SecondBackwardWithoutZeroGradThrows) {
  Tape t;
  auto x = t.leaf(Matrix::Constant(1, 1, 2.0));
  auto y = sum(mul(x, x));
  t.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 4.0);
  EXPECT_THROW(t.backward(y), std::logic_error);
  t.zero_grad();
  t.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 4.0);
}

TEST(Autograd, BackwardNeedsScalar) {
  Tape t;
  auto x = t.leaf(Matrix::Ones(2, 2));
  EXPECT_THROW(t.backward(x), DimensionError);
}

TEST(Autograd, ShapeMismatchNamesShapes) {
  Tape t;
  auto a = t.leaf(Matrix::Ones(2, 3));
  auto b = t.leaf(Matrix::Ones(2, 3));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("(2, 3)"), std::string::npos) << e.what();
  }
}

TEST(Autograd, OneBlockTransformerLoss) {
  auto cfg = steer::fixture::tiny_config(12, 1);
  cfg.d_model = 8;
  cfg.d_ff = 16;
  const auto model = steer::model::Transformer::init(cfg);
  const std::vector<int> tokens{0, 5, 7, 2, 9, 3};
  const std::vector<int> targets{5, 7, 2, 9, 3};
  const auto params = model.weights().flatten();
  const auto report = grad_check(
      [&](Tape& t, const std::vector<Tensor>& leaves) {
        auto out = model.forward(t, std::span<const int>(tokens.data(), 5), 0, {}, nullptr, &leaves);
        return cross_entropy(out.logits, targets);
      },
      params, 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << report.max_relative_error;
}

TEST(Primitives, KnownValues) {
  Tape t;
  EXPECT_TRUE(softmax(t.constant(Matrix::Zero(1, 2))).value().isApproxToConstant(0.5, 1e-15));
  Rng r(21);
  const Matrix a = random_matrix(3, 3, r);
  EXPECT_EQ(matmul(t.constant(Matrix::Identity(3, 3)), t.constant(a)).value(), a);
  const std::vector<int> target{2};
  // -ln(1/4) evaluated independently.
  EXPECT_NEAR(cross_entropy(t.constant(Matrix::Zero(1, 4)), target).value()(0, 0), -std::log(0.25), 1e-15);
}

TEST(Primitives, SimpleGradients) {
  Tape t;
  auto x = t.leaf(Matrix::Constant(1, 5, 0.3));
  t.backward(sum(x));
  EXPECT_EQ(x.grad(), Matrix::Ones(1, 5));
  Tape u;
  auto s = u.leaf(Matrix::Constant(1, 1, 3.0));
  u.backward(sum(mul(s, s)));
  EXPECT_DOUBLE_EQ(s.grad()(0, 0), 6.0);
}

TEST(Primitives, RowInvariants) {
  Rng r(22);
  Tape t;
  const auto p = softmax(t.constant(random_matrix(4, 9, r) * 5.0)).value();
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
  const auto n = rms_norm(t.constant(random_matrix(4, 9, r)), t.constant(Matrix::Ones(1, 9))).value();
  for (Eigen::Index i = 0; i < n.rows(); ++i) EXPECT_NEAR(std::sqrt(n.row(i).squaredNorm() / 9.0), 1.0, 1e-10);
}

TEST(GradCheck, PolynomialPassesTightly) {
  Rng r(23);
  const auto report =
      grad_check([](Tape&, const std::vector<Tensor>& x) { return sum(mul(x[0], x[0])); }, {random_matrix(3, 4, r)},
                 1e-5, 1e-6);
  EXPECT_TRUE(report.pass) << report.max_relative_error;
}

TEST(GradCheck, CorruptedGradientFails) {
  Rng r(24);
  const TapedFunction f = [](Tape& t, const std::vector<Tensor>& x) { return weighted(t, gelu(x[0]), 24); };
  const std::vector<Matrix> point{random_matrix(3, 4, r)};
  auto g = analytic_gradients(f, point);
  g[0](1, 2) *= 1.1;
  const auto report = compare_gradients(f, point, g, 1e-5, 1e-4);
  EXPECT_FALSE(report.pass);
  EXPECT_EQ(report.worst_row, 1);
  EXPECT_EQ(report.worst_col, 2);
}

TEST(GradCheck, TwoLayerMlp) {
  Rng r(25);
  const std::vector<int> targets{1, 0, 3};
  expect_passes(
      [&](Tape&, const std::vector<Tensor>& x) {
        return cross_entropy(matmul(gelu(matmul(x[0], x[1])), x[2]), targets);
      },
      {random_matrix(3, 5, r), random_matrix(5, 6, r), random_matrix(6, 4, r)});
}
