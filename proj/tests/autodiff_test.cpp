#include <heterosgt/autodiff.hpp>
#include <heterosgt/gradcheck.hpp>
#include <heterosgt/optim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>

#include "op_cases.hpp"
#include "test_util.hpp"

namespace heterosgt::ad {
namespace {

using heterosgt::testing::away_from_zero;
using heterosgt::testing::op_cases;
using heterosgt::testing::probe;
using heterosgt::testing::random_matrix;

TEST(Backprop, IdentityLossHasUnitGradient) {
  Parameter x("x", Matrix::Constant(1, 1, 3.5));
  Tape tape;
  tape.backward(tape.param(x));
  EXPECT_EQ(x.grad(0, 0), 1.0);
}

TEST(Backprop, SumOfSquares) {
  Tape tape;
  Matrix v(1, 3);
  v << 1, 2, 3;
  Var x = tape.variable(v);
  tape.backward(sum(mul(x, x)));
  Matrix g = tape.grad(x);
  EXPECT_EQ(g(0, 0), 2.0);
  EXPECT_EQ(g(0, 1), 4.0);
  EXPECT_EQ(g(0, 2), 6.0);
}

TEST(Backprop, RejectsNonScalarLoss) {
  Tape tape;
  Var x = tape.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(tape.backward(x), AdError);
}

TEST(Backprop, RejectsForeignTensors) {
  Tape a, b;
  Var x = a.variable(Matrix::Ones(1, 1));
  EXPECT_THROW(b.backward(x), AdError);
  EXPECT_THROW(add(x, b.variable(Matrix::Ones(1, 1))), AdError);
  Var unrecorded;
  EXPECT_THROW(unrecorded.value(), AdError);
}

TEST(Backprop, ForwardOnlyTapeRefusesBackward) {
  Tape tape(false);
  Var x = tape.variable(Matrix::Ones(1, 1));
  EXPECT_THROW(tape.backward(x), AdError);
}

TEST(Backprop, FiniteCheckCatchesNonFiniteValues) {
  Tape tape;
  tape.set_check_finite(true);
  Var x = tape.variable(Matrix::Constant(1, 1, -1.0));
  EXPECT_THROW(log(x), AdError);
}

TEST(Backprop, SinglePassVisitsEachNodeAtMostOnce) {
  Rng rng(3);
  Parameter w("w", random_matrix(4, 4, rng));
  Tape tape;
  Var h = tape.constant(random_matrix(1, 4, rng));
  for (int i = 0; i < 50; ++i) h = tanh(matmul(h, tape.param(w)));
  Var loss = sum(h);
  tape.backward(loss);
  // 50 x (matmul, tanh) + sum; leaves have no closures.
  EXPECT_EQ(tape.backward_steps(), 101u);
  EXPECT_LE(tape.backward_steps(), tape.size());
}

TEST(Backprop, RepeatedRunsAreBitwiseIdentical) {
  auto run = [] {
    Rng rng(11);
    Parameter a("a", random_matrix(3, 5, rng));
    Parameter b("b", random_matrix(5, 2, rng));
    Tape tape;
    Var y = softmax_rows(matmul(tape.param(a), tape.param(b)));
    tape.backward(probe(y, 5));
    return std::make_pair(a.grad, b.grad);
  };
  auto first = run();
  auto second = run();
  EXPECT_TRUE(first.first == second.first);
  EXPECT_TRUE(first.second == second.second);
}

// ---------------------------------------------------------------------------
// Per-op gradient checks: 10 random instances each, relative error < 1e-4.

TEST(GradCheck, EverySupportedOpMatchesCentralDifferences) {
  for (const auto& c : op_cases()) {
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng(derive_seed(42, {hash_tag(c.name), static_cast<std::uint64_t>(trial)}));
      Parameter x("x", c.init(rng, c.rows, c.cols));
      auto program = [&](Tape& t) { return probe(c.op(t, t.param(x)), 99 + trial); };
      auto res = finite_diff_check(program, x);
      EXPECT_LT(res.max_rel_error, 1e-4) << c.name << " trial " << trial << " analytic " << res.analytic
                                         << " numeric " << res.numeric;
    }
  }
}

TEST(GradCheck, LayerNormGainAndBias) {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(500 + trial);
    Matrix x = random_matrix(3, 5, rng);
    Parameter gain("g", random_matrix(1, 5, rng)), bias("b", random_matrix(1, 5, rng));
    auto program = [&](Tape& t) {
      return probe(layer_norm(t.constant(x), t.param(gain), t.param(bias)), 7);
    };
    EXPECT_LT(finite_diff_check(program, gain).max_rel_error, 1e-4);
    EXPECT_LT(finite_diff_check(program, bias).max_rel_error, 1e-4);
  }
}

TEST(GradCheck, EmbeddingGatherAccumulatesSparseRows) {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(900 + trial);
    Parameter table("emb", random_matrix(6, 3, rng));
    const std::vector<int> ids{4, 1, 4, 0};
    auto program = [&](Tape& t) { return probe(tanh(embedding(t, table, ids)), 13); };
    EXPECT_LT(finite_diff_check(program, table).max_rel_error, 1e-4);
  }
  Rng rng(1);
  Parameter table("emb", random_matrix(6, 3, rng));
  Tape tape;
  const std::vector<int> ids{2};
  tape.backward(sum(embedding(tape, table, ids)));
  EXPECT_EQ(table.grad.row(2).sum(), 3.0);
  EXPECT_EQ(table.grad.sum(), 3.0);
}

TEST(GradCheck, RandomCompositeOfFiveOps) {
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng(1300 + trial);
    Parameter a("a", random_matrix(3, 4, rng));
    Parameter b("b", random_matrix(4, 4, rng));
    Matrix c = random_matrix(1, 4, rng);
    auto program = [&](Tape& t) {
      Var h = tanh(matmul(t.param(a), t.param(b)));
      Var s = softmax_rows(add_row(h, t.constant(c)));
      return sum(mul(s, sigmoid(h)));
    };
    EXPECT_LT(finite_diff_check(program, a).max_rel_error, 1e-4);
    EXPECT_LT(finite_diff_check(program, b).max_rel_error, 1e-4);
  }
}

TEST(GradCheck, QuadraticIsExactUpToRoundoff) {
  Parameter x("x", Matrix::Constant(1, 1, 3.0));
  auto program = [&](Tape& t) { return mul(t.param(x), t.param(x)); };
  auto res = finite_diff_check(program, x);
  EXPECT_EQ(res.analytic, 6.0);
  EXPECT_NEAR(res.numeric, 6.0, 1e-8);
}

TEST(GradCheck, SoftmaxCrossEntropyToy) {
  Rng rng(77);
  Parameter logits("z", random_matrix(4, 2, rng, -2.0, 2.0));
  Matrix onehot(4, 2);
  onehot << 1, 0, 0, 1, 0, 1, 1, 0;
  auto program = [&](Tape& t) {
    Var p = softmax_rows(t.param(logits));
    return scale(sum(mul(log(p), t.constant(onehot))), -0.25);
  };
  EXPECT_LT(finite_diff_check(program, logits).max_rel_error, 1e-6);
}

TEST(GradCheck, CorruptedAdjointIsFlagged) {
  Rng rng(5);
  Parameter x("x", random_matrix(2, 2, rng, 0.5, 1.5));
  auto doubled_square = [](Var v) {
    Matrix out = v.value().cwiseProduct(v.value());
    return v.tape()->record(std::move(out), {v}, [](Tape::Pass& p) {
      p.in_grad(0) += 2.0 * (2.0 * p.in_value(0)).cwiseProduct(p.out_grad());
    }, "bad_square");
  };
  auto program = [&](Tape& t) { return sum(doubled_square(t.param(x))); };
  auto res = finite_diff_check(program, x);
  EXPECT_NEAR(res.max_rel_error, 0.5, 1e-6);
  EXPECT_FALSE(res.passed(1e-4));
}

// ---------------------------------------------------------------------------
// Adam

TEST(Adam, ZeroGradientLeavesParametersButCountsStep) {
  Parameter p("p", Matrix::Constant(2, 2, 0.7));
  std::vector<Parameter*> ps{&p};
  AdamState st;
  adam_step(ps, st, 5e-5, 0.0);
  EXPECT_EQ(st.step, 1);
  EXPECT_TRUE(p.value == Matrix::Constant(2, 2, 0.7));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {1e-3, -0.5, 42.0}) {
    Parameter p("p", Matrix::Constant(1, 1, 1.0));
    p.grad(0, 0) = g;
    std::vector<Parameter*> ps{&p};
    AdamState st;
    const double lr = 5e-5;
    adam_step(ps, st, lr, 0.0);
    const double delta = p.value(0, 0) - 1.0;
    EXPECT_LT(delta * g, 0.0);
    EXPECT_GE(std::abs(delta), 0.999 * lr);
    EXPECT_LE(std::abs(delta), lr);
  }
}

TEST(Adam, TwoStepsMatchHandRecurrence) {
  Parameter p("p", Matrix::Constant(1, 1, 0.5));
  std::vector<Parameter*> ps{&p};
  AdamState st;
  const double lr = 0.1, wd = 0.01;
  double x = 0.5, m = 0, v = 0;
  for (int t = 1; t <= 2; ++t) {
    const double grad = t == 1 ? 0.3 : -0.2;
    p.grad(0, 0) = grad;
    adam_step(ps, st, lr, wd);
    const double g = grad + wd * x;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    x -= lr * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(p.value(0, 0), x, 1e-15);
  }
}

TEST(Adam, RejectsNonFiniteGradient) {
  Parameter p("p", Matrix::Zero(1, 2));
  p.grad(0, 1) = std::nan("");
  std::vector<Parameter*> ps{&p};
  AdamState st;
  EXPECT_THROW(adam_step(ps, st, 1e-3, 0.0), AdError);
  EXPECT_THROW(adam_step(ps, st, 0.0, 0.0), AdError);
}

}  // namespace
}  // namespace heterosgt::ad
