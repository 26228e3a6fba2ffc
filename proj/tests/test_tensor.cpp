#include <gtest/gtest.h>

#include <cmath>

#include "dvae/rng.hpp"
#include "dvae/tensor.hpp"

using namespace dvae;

TEST(Matmul, IdentityLeavesColumnUnchanged) {
  MatrixX col(2, 1);
  col << 3, 4;
  EXPECT_EQ(matmul(MatrixX::Identity(2, 2), col), col);
}

TEST(Matmul, ZeroOperand) {
  MatrixX a(1, 2);
  a << 1, 2;
  EXPECT_EQ(matmul(a, MatrixX::Zero(2, 1))(0, 0), 0.0);
}

TEST(Matmul, HandMultiplied) {
  MatrixX a(2, 2), b(2, 2), expected(2, 2);
  a << 1, 2, 3, 4;
  b << 5, 6, 7, 8;
  expected << 19, 22, 43, 50;
  EXPECT_EQ(matmul(a, b), expected);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(MatrixX::Zero(2, 3), MatrixX::Zero(4, 5));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4x5]"), std::string::npos) << msg;
  }
}

TEST(Matmul, IdentityIsExactOnRandomMatrices) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixX a(5, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = 10.0 * rng.uniform() - 5.0;
    EXPECT_EQ(matmul(MatrixX::Identity(5, 5), a), a);
  }
}

TEST(RowwiseSoftmax, Examples) {
  MatrixX logits(3, 3);
  logits << 0, 0, 0, 7, 7, 0, 0, std::log(3.0), 0;
  logits(1, 2) = 7;
  const MatrixX p = rowwise_softmax(logits);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(p(0, c), 1.0 / 3.0, 1e-15);

  MatrixX pair(2, 2);
  pair << 123.0, 123.0, std::log(1.0), std::log(3.0);
  const MatrixX q = rowwise_softmax(pair);
  EXPECT_NEAR(q(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(q(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(q(1, 0), 0.25, 1e-15);
  EXPECT_NEAR(q(1, 1), 0.75, 1e-15);
}

TEST(RowwiseSoftmax, LargeLogitsStayFinite) {
  MatrixX logits(1, 3);
  logits << 1000.0, 999.0, -1000.0;
  const MatrixX p = rowwise_softmax(logits);
  EXPECT_TRUE(all_finite(p));
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(RowwiseSoftmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<Eigen::Index>(2 + rng.below(10));
    MatrixX logits(4, k);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = 20.0 * rng.uniform() - 10.0;
    MatrixX shifted = logits;
    for (Eigen::Index r = 0; r < 4; ++r) shifted.row(r).array() += 50.0 * rng.uniform() - 25.0;
    const MatrixX p = rowwise_softmax(logits);
    const MatrixX q = rowwise_softmax(shifted);
    for (Eigen::Index r = 0; r < 4; ++r) {
      EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
      EXPECT_GE(p.row(r).minCoeff(), 0.0);
    }
    EXPECT_LE((p - q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sigmoid, Examples) {
  EXPECT_EQ(logistic(0.0), 0.5);
  EXPECT_NEAR(logistic(50.0), 1.0, 1e-12);
  EXPECT_TRUE(std::isfinite(logistic(-800.0)));
  EXPECT_GT(logistic(-30.0), 0.0);
  EXPECT_NEAR(logistic(std::log(3.0)), 0.75, 1e-15);

  VectorX t(3);
  t << 0.0, std::log(3.0), -std::log(3.0);
  const VectorX s = sigmoid(t);
  EXPECT_NEAR(s(1), 0.75, 1e-15);
  EXPECT_NEAR(s(2), 0.25, 1e-15);
}

TEST(Sigmoid, Symmetry) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double t = 80.0 * rng.uniform() - 40.0;
    EXPECT_NEAR(logistic(-t), 1.0 - logistic(t), 1e-15) << t;
  }
}
