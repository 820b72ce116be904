#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pae/error.hpp"
#include "pae/gradcheck.hpp"
#include "pae/graph.hpp"
#include "pae/layers.hpp"
#include "pae/losses.hpp"
#include "pae/optim.hpp"
#include "pae/rng.hpp"

namespace pae::ad {
namespace {

Tensor random_tensor(Shape shape, SplitMix64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.normal(0.0, scale);
  return t;
}

TEST(Tensor, RejectsZeroDimensionsAndMismatchedData) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  const Tensor m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m.at(1, 2), 6.0);
}

TEST(Forward, ReluClampsNegatives) {
  Graph g;
  const NodeId out = g.relu(g.constant(Tensor::vector({-1.0, 0.0, 2.0})));
  EXPECT_EQ(g.value(out), Tensor::vector({0.0, 0.0, 2.0}));
}

TEST(Forward, L2NormOfThreeFour) {
  Graph g;
  EXPECT_EQ(g.value(g.l2norm(g.constant(Tensor::vector({3.0, 4.0})))).item(), 5.0);
}

TEST(Forward, MatmulWithOnesGivesRowSums) {
  Graph g;
  const NodeId a = g.constant(Tensor::matrix(2, 3, {1, 1, 1, 1, 1, 1}));
  const NodeId b = g.constant(Tensor::matrix(3, 1, {1, 1, 1}));
  const Tensor& out = g.value(g.matmul(a, b));
  EXPECT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 3.0);
}

TEST(Forward, ShapeMismatchNamesBothShapes) {
  Graph g;
  const NodeId a = g.constant(Tensor({2, 3}, 1.0));
  const NodeId b = g.constant(Tensor({2, 3}, 1.0));
  try {
    g.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_GE(std::count(msg.begin(), msg.end(), '['), 2) << msg;
  }
  EXPECT_THROW(g.add(a, g.constant(Tensor({3, 2}, 1.0))), ShapeError);
  EXPECT_THROW(g.slice(a, 2, 5), ShapeError);
}

TEST(Forward, NonFiniteOutputIsRejected) {
  Graph g;
  EXPECT_THROW(g.exp(g.constant(Tensor::scalar(1000.0))), NumericalError);
}

TEST(Forward, IsBitDeterministic) {
  SplitMix64 rng(3);
  const Tensor x = random_tensor({4, 5}, rng);
  const Tensor w = random_tensor({5, 6}, rng);
  Graph g1, g2;
  const Tensor a = g1.value(g1.l2norm(g1.exp(g1.matmul(g1.constant(x), g1.constant(w)))));
  const Tensor b = g2.value(g2.l2norm(g2.exp(g2.matmul(g2.constant(x), g2.constant(w)))));
  EXPECT_EQ(a, b);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor p({3}, 1.0);
  Graph g;
  const NodeId n = g.parameter(p);
  EXPECT_THROW(g.backward(n), ShapeError);
}

TEST(Backward, SumGivesAllOnes) {
  Tensor p({2, 3}, 0.5);
  Graph g;
  const Gradients grads = g.backward(g.sum(g.parameter(p)));
  EXPECT_EQ(grads.of(p), Tensor({2, 3}, 1.0));
}

TEST(Backward, L2NormAtZeroHasZeroSubgradient) {
  Tensor p = Tensor::vector({1.0, -2.0, 0.5});
  Graph g;
  const NodeId diff = g.sub(g.parameter(p), g.constant(p));
  const Gradients grads = g.backward(g.sum(g.l2norm(diff)));
  EXPECT_EQ(grads.of(p), Tensor({3}, 0.0));
}

TEST(Backward, SharedParameterAccumulatesOneGradient) {
  Tensor p = Tensor::vector({2.0});
  Graph g;
  const NodeId a = g.parameter(p);
  const NodeId b = g.parameter(p);
  EXPECT_EQ(a, b);
  const Gradients grads = g.backward(g.sum(g.mul(a, b)));
  EXPECT_DOUBLE_EQ(grads.of(p)[0], 4.0);
}

TEST(GradCheck, TwoLayerNetMatchesFiniteDifferences) {
  SplitMix64 rng(11);
  ParameterList params;
  nn::Mlp net(params, "net", {5, 7, 2}, false, rng);
  const GradCheckResult r = grad_check_resampling(params, [&](std::uint64_t attempt) -> LossBuilder {
    SplitMix64 in(derive_seed(11, stream::kGradCheck, attempt));
    const Tensor x = random_tensor({1, 5}, in);
    return [&net, &params, x](Graph& g) { return g.sum(net.apply(g, params, g.constant(x))); };
  });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter << "[" << r.worst_index << "]";
  EXPECT_GT(r.entries_checked, 0u);
}

TEST(GradCheck, LinearModelIsExact) {
  SplitMix64 rng(0);
  ParameterList params;
  const nn::Linear lin = nn::Linear::create(params, "lin", 4, 3, false, rng);
  const Tensor x = random_tensor({2, 4}, rng);
  const GradCheckResult r = grad_check(params, [&](Graph& g) { return g.sum(lin.apply(g, params, g.constant(x))); });
  EXPECT_LT(r.max_relative_error, 1e-8);
}

TEST(GradCheck, FourLayerReluMlpSeedZero) {
  SplitMix64 rng(0);
  ParameterList params;
  nn::Mlp net(params, "mlp", {6, 16, 16, 16, 3}, false, rng);
  const GradCheckResult r = grad_check_resampling(params, [&](std::uint64_t attempt) -> LossBuilder {
    SplitMix64 in(derive_seed(0, stream::kGradCheck, attempt));
    const Tensor x = random_tensor({3, 6}, in);
    const Tensor y = random_tensor({3, 3}, in);
    return [&net, &params, x, y](Graph& g) {
      return g.mean(g.l2norm(g.sub(net.apply(g, params, g.constant(x)), g.constant(y))));
    };
  });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
  EXPECT_GE(r.min_relu_margin, 1e-4);
}

TEST(GradCheck, LearnablePoseLossWeights) {
  ParameterList params;
  params.add("s_x", Tensor::scalar(0.3));
  params.add("s_q", Tensor::scalar(-3.0));
  const double lx = 1.7, lq = 0.05;
  auto build = [&](Graph& g) {
    const NodeId sx = g.parameter(params[0].value);
    const NodeId sq = g.parameter(params[1].value);
    return g.add(graph_loss::weighted_term(g, g.constant(Tensor::scalar(lx)), sx),
                 graph_loss::weighted_term(g, g.constant(Tensor::scalar(lq)), sq));
  };
  const GradCheckResult r = grad_check(params, build);
  EXPECT_LT(r.max_relative_error, 1e-6);

  Graph g;
  const Gradients grads = g.backward(build(g));
  EXPECT_NEAR(grads.of(params[0].value).item(), -lx * std::exp(-0.3) + 1.0, 1e-12);
  EXPECT_NEAR(grads.of(params[1].value).item(), -lq * std::exp(3.0) + 1.0, 1e-12);
}

/// Every op kind, differentiated through a random linear read-out.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesCentralDifferences) {
  const int which = GetParam();
  ParameterList params;
  SplitMix64 rng(100 + static_cast<std::uint64_t>(which));
  params.add("a", random_tensor({3, 4}, rng));
  params.add("b", random_tensor({4, 4}, rng));
  const Tensor readout_wide = random_tensor({3, 8}, rng);
  const Tensor readout = random_tensor({3, 4}, rng);
  const Tensor readout_col = random_tensor({3, 1}, rng);
  auto head = [&](Graph& g, NodeId n) {
    const Shape& s = g.value(n).shape();
    if (s.size() == 2 && s[1] == 8) return g.sum(g.mul(n, g.constant(readout_wide)));
    if (s.size() == 2 && s[1] == 4) return g.sum(g.mul(n, g.constant(readout)));
    if (s.size() == 2 && s[1] == 1) return g.sum(g.mul(n, g.constant(readout_col)));
    return g.sum(n);
  };
  auto builder = [&](Graph& g) -> NodeId {
    const NodeId a = g.parameter(params[0].value);
    const NodeId b = g.parameter(params[1].value);
    switch (which) {
      case 0: return head(g, g.matmul(a, b));
      case 1: return head(g, g.add(a, g.slice(g.concat(g.matmul(a, b), a), 2, 6)));
      case 2: return head(g, g.relu(a));
      case 3: return head(g, g.concat(a, g.slice(g.matmul(a, b), 0, 4)));
      case 4: return head(g, g.slice(g.concat(a, a), 2, 6));
      case 5: return head(g, g.mul(a, g.exp(a)));
      case 6: return head(g, g.scale(a, -2.5));
      case 7: return g.scale(g.sum(g.matmul(a, b)), 0.3);
      case 8: return g.mean(g.matmul(a, b));
      case 9: return head(g, g.l2norm(a));
      case 10: return g.l1loss(a, g.scale(g.matmul(a, b), 0.5));
      case 11: return head(g, g.exp(g.scale(a, 0.5)));
      case 12: return head(g, g.negate(g.matmul(a, b)));
      case 13: return head(g, g.normalize(a));
      default: return g.sum(a);
    }
  };
  GradCheckOptions opts;
  const GradCheckResult r = grad_check_resampling(params, [&](std::uint64_t attempt) -> LossBuilder {
    if (attempt > 0) {
      SplitMix64 again(derive_seed(100 + static_cast<std::uint64_t>(which), stream::kGradCheck, attempt));
      params[0].value = random_tensor({3, 4}, again);
    }
    return builder;
  }, opts);
  EXPECT_LT(r.max_relative_error, 1e-4) << "op case " << which << " worst " << r.worst_parameter;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, 14));

Gradients gradient_of(Graph& g, const Tensor& p, double slope) {
  return g.backward(g.sum(g.scale(g.parameter(p), slope)));
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParameterList params;
  params.add("p", Tensor::vector({0.25, -1.5}));
  OptimState opt = OptimState::adam(1e-3);
  for (int i = 0; i < 5; ++i) {
    Graph g;
    step(opt, params, gradient_of(g, params[0].value, 0.0));
  }
  EXPECT_EQ(params[0].value, Tensor::vector({0.25, -1.5}));
  EXPECT_EQ(opt.step, 5u);
}

TEST(Adam, FirstStepMatchesHandFormula) {
  const double g0 = 0.37, lr = 0.01, eps = 1e-10, b1 = 0.9, b2 = 0.999;
  ParameterList params;
  params.add("p", Tensor::scalar(2.0));
  OptimState opt = OptimState::adam(lr, b1, b2, eps);
  Graph g;
  step(opt, params, gradient_of(g, params[0].value, g0));
  // m = (1-b1) g, v = (1-b2) g^2, corrected by 1/(1-b^1).
  const double m_hat = (1.0 - b1) * g0 / (1.0 - b1);
  const double v_hat = (1.0 - b2) * g0 * g0 / (1.0 - b2);
  const double expected = 2.0 - lr * m_hat / (std::sqrt(v_hat) + eps);
  EXPECT_NEAR(params[0].value.item(), expected, 1e-15);
  EXPECT_NEAR(2.0 - params[0].value.item(), lr * g0 / (g0 + eps), 1e-15);
}

TEST(Adam, SecondStepMatchesHandFormula) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-10;
  const double grads[2] = {0.5, -0.2};
  ParameterList params;
  params.add("p", Tensor::scalar(1.0));
  OptimState opt = OptimState::adam(lr, b1, b2, eps);
  double p = 1.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    Graph g;
    step(opt, params, gradient_of(g, params[0].value, grads[t - 1]));
    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    p -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  EXPECT_NEAR(params[0].value.item(), p, 1e-15);
}

TEST(AdamW, ZeroGradientContractsByDecay) {
  const double lr = 0.1, wd = 0.05;
  ParameterList params;
  params.add("p", Tensor::vector({1.0, -3.0}));
  OptimState opt = OptimState::adamw(lr, wd);
  for (int i = 1; i <= 3; ++i) {
    Graph g;
    step(opt, params, gradient_of(g, params[0].value, 0.0));
    const double factor = std::pow(1.0 - lr * wd, i);
    EXPECT_NEAR(params[0].value[0], 1.0 * factor, 1e-15);
    EXPECT_NEAR(params[0].value[1], -3.0 * factor, 1e-15);
  }
}

TEST(Adam, NonFiniteGradientNamesParameterAndLeavesStateUntouched) {
  ParameterList params;
  params.add("encoder.weight", Tensor::scalar(1e-300));
  OptimState opt = OptimState::adam(1e-3);
  Graph g;
  const NodeId p = g.parameter(params[0].value);
  const Gradients grads = g.backward(g.sum(g.scale(g.scale(p, 1e200), 1e200)));
  try {
    step(opt, params, grads);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.weight"), std::string::npos);
  }
  EXPECT_EQ(opt.step, 0u);
  EXPECT_EQ(params[0].value.item(), 1e-300);
}

TEST(Adam, SkipsParametersWithoutGradient) {
  ParameterList params;
  params.add("used", Tensor::scalar(1.0));
  params.add("unused", Tensor::scalar(5.0));
  OptimState opt = OptimState::adamw(0.1, 0.5);
  Graph g;
  step(opt, params, gradient_of(g, params[0].value, 1.0));
  EXPECT_NE(params[0].value.item(), 1.0);
  EXPECT_EQ(params[1].value.item(), 5.0);
}

TEST(ParameterList, RejectsDuplicateNames) {
  ParameterList params;
  params.add("w", Tensor::scalar(1.0));
  EXPECT_THROW(params.add("w", Tensor::scalar(2.0)), ValidationError);
  EXPECT_THROW(params.get("missing"), ValidationError);
}

}  // namespace
}  // namespace pae::ad
