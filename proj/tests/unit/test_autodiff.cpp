#include <gtest/gtest.h>

#include <functional>

#include "xtal/autodiff.hpp"
#include "xtal/parameters.hpp"

using namespace xtal;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

using Fn = std::function<Var(Tape&, Var)>;

/// Relative error between the tape gradient and central differences of f at x.
double gradient_error(const Fn& f, Matrix x, double h = 1e-6) {
  Tape t;
  const Var v = t.variable(x);
  t.backward(f(t, v));
  const Matrix analytic = t.grad(v);
  Matrix numeric(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    Tape tp;
    const double lp = tp.scalar(f(tp, tp.variable(x)));
    x(i) = keep - h;
    Tape tm;
    const double lm = tm.scalar(f(tm, tm.variable(x)));
    x(i) = keep;
    numeric(i) = (lp - lm) / (2 * h);
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

Matrix random(int r, int c, unsigned seed) {
  std::srand(seed);
  return Matrix::Random(r, c);
}

/// Projects a matrix-valued op to a scalar with fixed random weights.
Var project(Tape& t, Var y, unsigned seed = 99) {
  const Matrix& v = t.value(y);
  return t.sum(t.mul(y, t.constant(random(static_cast<int>(v.rows()), static_cast<int>(v.cols()), seed))));
}

}  // namespace

TEST(Tape, ElementwiseGradients) {
  const Matrix x = random(3, 4, 1);
  const Matrix c = random(3, 4, 2);
  const std::vector<std::pair<const char*, Fn>> ops = {
      {"add", [&](Tape& t, Var v) { return project(t, t.add(v, t.constant(c))); }},
      {"sub", [&](Tape& t, Var v) { return project(t, t.sub(t.constant(c), v)); }},
      {"mul", [&](Tape& t, Var v) { return project(t, t.mul(v, v)); }},
      {"scale", [&](Tape& t, Var v) { return project(t, t.scale(v, -2.5)); }},
      {"add_scalar", [&](Tape& t, Var v) { return project(t, t.square(t.add_scalar(v, 0.7))); }},
      {"square", [&](Tape& t, Var v) { return project(t, t.square(v)); }},
      {"exp", [&](Tape& t, Var v) { return project(t, t.exp(v)); }},
      {"silu", [&](Tape& t, Var v) { return project(t, t.silu(v)); }},
      {"sigmoid", [&](Tape& t, Var v) { return project(t, t.sigmoid(v)); }},
      {"softplus", [&](Tape& t, Var v) { return project(t, t.softplus(v)); }},
      {"relu", [&](Tape& t, Var v) { return project(t, t.relu(t.add_scalar(v, 0.05))); }},
      {"mean", [&](Tape& t, Var v) { return t.mean(t.square(v)); }},
  };
  for (const auto& [name, f] : ops) EXPECT_LT(gradient_error(f, x), 1e-7) << name;
}

TEST(Tape, LinearAlgebraAndStructuralGradients) {
  const Matrix x = random(4, 3, 3);
  const Matrix w = random(3, 5, 4);
  const Matrix left = random(2, 4, 9);
  const Matrix row = random(1, 3, 5);
  const Matrix col = random(4, 1, 6);
  const std::vector<int> rows = {2, 0, 2, 3, 1};
  const std::vector<std::pair<const char*, Fn>> ops = {
      {"matmul_left", [&](Tape& t, Var v) { return project(t, t.matmul(v, t.constant(w))); }},
      {"matmul_right", [&](Tape& t, Var v) { return project(t, t.matmul(t.constant(left), t.matmul(v, t.constant(w)))); }},
      {"add_row", [&](Tape& t, Var v) { return project(t, t.square(t.add_row(v, t.constant(row)))); }},
      {"add_row_bias", [&](Tape& t, Var v) { return project(t, t.square(t.add_row(t.constant(x), t.slice_cols(t.sum_rows(v), 0, 3)))); }},
      {"mul_col", [&](Tape& t, Var v) { return project(t, t.mul_col(v, t.constant(col))); }},
      {"mul_col_weights", [&](Tape& t, Var v) { return project(t, t.mul_col(t.constant(x), t.slice_cols(v, 1, 1))); }},
      {"gather", [&](Tape& t, Var v) { return project(t, t.gather_rows(v, rows)); }},
      {"scatter", [&](Tape& t, Var v) { return project(t, t.scatter_add_rows(v, std::vector<int>{1, 1, 0, 4}, 6)); }},
      {"sum_rows", [&](Tape& t, Var v) { return project(t, t.sum_rows(t.square(v))); }},
      {"concat", [&](Tape& t, Var v) { return project(t, t.concat_cols(t.exp(v), v)); }},
      {"slice", [&](Tape& t, Var v) { return project(t, t.slice_cols(t.square(v), 1, 2)); }},
  };
  for (const auto& [name, f] : ops) EXPECT_LT(gradient_error(f, x), 1e-7) << name;
}

TEST(Tape, LossGradients) {
  const Matrix logits = random(3, 5, 7);
  const std::vector<int> targets = {4, 0, 2};
  Matrix probs = (random(3, 5, 8).array() + 1.0) / 2.0;
  EXPECT_LT(gradient_error([&](Tape& t, Var v) { return t.softmax_cross_entropy(v, targets); }, logits), 1e-7);
  EXPECT_LT(gradient_error([&](Tape& t, Var v) { return t.bce_with_logits(v, probs); }, logits), 1e-7);
}

TEST(Tape, CrossEntropyValues) {
  Tape t;
  const Var z = t.constant(Matrix::Zero(1, 20));
  EXPECT_NEAR(t.scalar(t.softmax_cross_entropy(z, std::vector<int>{3})), std::log(20.0), 1e-14);
  const Var big = t.constant(Matrix::Constant(1, 1, 800.0));
  EXPECT_NEAR(t.scalar(t.bce_with_logits(big, Matrix::Ones(1, 1))), 0.0, 1e-12);
  EXPECT_NEAR(t.scalar(t.bce_with_logits(big, Matrix::Zero(1, 1))), 800.0, 1e-9);
}

TEST(Tape, ConstantLossHasZeroGradient) {
  Parameters p;
  std::mt19937_64 rng(1);
  p.add_uniform("w", 3, 2, 3, rng);
  Tape t(&p);
  const Var w = t.param("w");
  t.backward(t.add(t.scale(t.sum(w), 0.0), t.constant(Matrix::Constant(1, 1, 4.0))));
  EXPECT_EQ(t.parameter_gradient().norm(), 0.0);
}

TEST(Tape, SquaredNormGradientIsTheta) {
  Parameters p;
  std::mt19937_64 rng(2);
  p.add_uniform("a", 2, 3, 2, rng);
  p.add_uniform("b", 1, 4, 2, rng);
  Tape t(&p);
  const Var l = t.scale(t.add(t.sum(t.square(t.param("a"))), t.sum(t.square(t.param("b")))), 0.5);
  t.backward(l);
  EXPECT_LT((t.parameter_gradient() - p.values()).norm(), 1e-15);
}

TEST(Tape, SharedParameterAccumulates) {
  Parameters p;
  p.add("w", 1, 1);
  p.values()(0) = 3.0;
  Tape t(&p);
  const Var a = t.param("w");
  const Var b = t.param("w");
  t.backward(t.sum(t.mul(a, b)));
  EXPECT_DOUBLE_EQ(t.parameter_gradient()(0), 6.0);
}

TEST(Parameters, SegmentsViewsAndPrefixes) {
  Parameters p;
  p.add("x", 2, 2);
  p.view("x")(1, 0) = 5.0;
  EXPECT_EQ(p.size(), 4u);
  EXPECT_TRUE(p.contains("x"));
  EXPECT_THROW(p.add("x", 1, 1), std::exception);
  Parameters q;
  q.append(p, "net.");
  EXPECT_TRUE(q.contains("net.x"));
  EXPECT_EQ(q.view("net.x")(1, 0), 5.0);
  EXPECT_EQ(q.extract("net."), p);
}
