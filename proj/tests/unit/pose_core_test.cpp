#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "pae/error.hpp"
#include "pae/fourier.hpp"
#include "pae/graph.hpp"
#include "pae/losses.hpp"
#include "pae/metrics.hpp"
#include "pae/pose.hpp"
#include "pae/rng.hpp"

namespace pae {
namespace {

constexpr double kExact = 1e-12;

Quaternion random_unit_quaternion(SplitMix64& rng) {
  return Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized().canonical();
}

Vec3 random_vec(SplitMix64& rng, double scale = 1.0) {
  return {rng.normal(0.0, scale), rng.normal(0.0, scale), rng.normal(0.0, scale)};
}

void expect_near(std::span<const double> actual, std::span<const double> expected, double tol) {
  ASSERT_EQ(actual.size(), expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) EXPECT_NEAR(actual[i], expected[i], tol) << "component " << i;
}

// --- Fourier features ---------------------------------------------------------

TEST(Fourier, ZeroAtTwoLevels) {
  const std::vector<double> out = fourier_encode(std::vector<double>{0.0}, FourierSpec{2});
  expect_near(out, std::vector<double>{0.0, 0.0, 1.0, 0.0, 1.0}, kExact);
}

TEST(Fourier, HalfAtOneLevel) {
  const std::vector<double> out = fourier_encode(std::vector<double>{0.5}, FourierSpec{1});
  expect_near(out, std::vector<double>{0.5, 1.0, 0.0}, kExact);
}

TEST(Fourier, ThreeVectorAtSixLevelsHas39Components) {
  const FourierSpec spec{6};
  EXPECT_EQ(spec.encoded_length(3), 39u);
  EXPECT_EQ(fourier_encode(std::vector<double>{0.1, -0.2, 0.3}, spec).size(), 39u);
}

TEST(Fourier, CoordinatesAreConcatenatedInOrder) {
  const std::vector<double> both = fourier_encode(std::vector<double>{0.25, -0.75}, FourierSpec{3});
  const std::vector<double> first = fourier_encode(std::vector<double>{0.25}, FourierSpec{3});
  const std::vector<double> second = fourier_encode(std::vector<double>{-0.75}, FourierSpec{3});
  ASSERT_EQ(both.size(), 14u);
  EXPECT_TRUE(std::equal(first.begin(), first.end(), both.begin()));
  EXPECT_TRUE(std::equal(second.begin(), second.end(), both.begin() + 7));
}

TEST(Fourier, ZeroLevelsPassesInputThrough) {
  const std::vector<double> in{1.5, -2.0, 7.0};
  EXPECT_EQ(fourier_encode(in, FourierSpec{0}), in);
}

TEST(Fourier, RejectsNonFiniteAndEmptyInput) {
  EXPECT_THROW(fourier_encode(std::vector<double>{0.0, std::nan("")}, FourierSpec{2}), ValidationError);
  EXPECT_THROW(fourier_encode(std::vector<double>{std::numeric_limits<double>::infinity()}, FourierSpec{2}),
               ValidationError);
  EXPECT_THROW(fourier_encode(std::vector<double>{}, FourierSpec{2}), ValidationError);
}

TEST(FourierProperty, LengthAndRangeOverRandomInputs) {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(6);
    const std::size_t levels = 1 + rng.below(8);
    std::vector<double> v(m);
    for (double& p : v) p = rng.normal(0.0, 5.0);
    const std::vector<double> out = fourier_encode(v, FourierSpec{levels});
    ASSERT_EQ(out.size(), m * (2 * levels + 1));
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t base = c * (2 * levels + 1);
      EXPECT_EQ(out[base], v[c]);
      for (std::size_t k = 1; k <= 2 * levels; ++k) {
        EXPECT_LE(std::abs(out[base + k]), 1.0);
      }
    }
  }
}

TEST(FourierProperty, MatchesDirectFormula) {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const double p = rng.uniform(-3.0, 3.0);
    const std::vector<double> out = fourier_encode(std::vector<double>{p}, FourierSpec{5});
    for (std::size_t k = 0; k < 5; ++k) {
      const double f = std::ldexp(std::numbers::pi, static_cast<int>(k)) * p;
      EXPECT_NEAR(out[1 + 2 * k], std::sin(f), kExact);
      EXPECT_NEAR(out[2 + 2 * k], std::cos(f), kExact);
    }
  }
}

// --- Losses -------------------------------------------------------------------

TEST(PositionLoss, Examples) {
  EXPECT_EQ(position_loss({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}), 0.0);
  EXPECT_NEAR(position_loss({4.0, 5.0, 1.0}, {1.0, 1.0, 1.0}), 5.0, kExact);
}

TEST(PositionLoss, MatchesIndependentNorm) {
  SplitMix64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 a = random_vec(rng, 10.0);
    const Vec3 b = random_vec(rng, 10.0);
    const double expected =
        std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
    EXPECT_NEAR(position_loss(a, b), expected, 1e-12 * (1.0 + expected));
  }
}

TEST(OrientationLoss, Examples) {
  const Quaternion q0 = Quaternion{0.5, 0.5, -0.5, 0.5};
  EXPECT_NEAR(orientation_loss(q0, q0), 0.0, kExact);
  EXPECT_NEAR(orientation_loss(2.0 * q0, q0), 0.0, kExact);
  EXPECT_NEAR(orientation_loss(-q0, q0), 2.0, kExact);
}

TEST(OrientationLoss, RejectsNearZeroPrediction) {
  EXPECT_THROW(orientation_loss(Quaternion{0.0, 0.0, 0.0, 0.0}, Quaternion{}), ValidationError);
  EXPECT_THROW(orientation_loss(Quaternion{1e-14, 0.0, 0.0, 0.0}, Quaternion{}), ValidationError);
}

TEST(OrientationLossProperty, InvariantToPositiveScale) {
  SplitMix64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Quaternion q0 = random_unit_quaternion(rng);
    const Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    EXPECT_NEAR(orientation_loss(c * q, q0), orientation_loss(q, q0), 1e-12);
  }
}

TEST(LearnablePoseLoss, Examples) {
  EXPECT_NEAR(learnable_pose_loss(0.7, 0.2, {0.0, 0.0}), 0.9, kExact);
  EXPECT_NEAR(learnable_pose_loss(0.0, 0.0, {1.25, -0.5}), 0.75, kExact);
  const double expected = 1.0 * std::exp(-0.0) + 0.0 + 0.1 * std::exp(3.0) - 3.0;
  EXPECT_NEAR(learnable_pose_loss(1.0, 0.1, {0.0, -3.0}), expected, kExact);
}

TEST(LearnablePoseLossProperty, GradientWrtWeightsMatchesAnalyticForm) {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double lx = rng.uniform(0.0, 3.0);
    const double lq = rng.uniform(0.0, 3.0);
    ad::Tensor sx = ad::Tensor::scalar(rng.uniform(-4.0, 4.0));
    ad::Tensor sq = ad::Tensor::scalar(rng.uniform(-4.0, 4.0));
    ad::Graph g;
    const ad::NodeId total = g.add(graph_loss::weighted_term(g, g.constant(ad::Tensor::scalar(lx)), g.parameter(sx)),
                                   graph_loss::weighted_term(g, g.constant(ad::Tensor::scalar(lq)), g.parameter(sq)));
    EXPECT_NEAR(g.value(total).item(), learnable_pose_loss(lx, lq, {sx.item(), sq.item()}), 1e-12);
    const ad::Gradients grads = g.backward(total);
    EXPECT_NEAR(grads.of(sx).item(), -lx * std::exp(-sx.item()) + 1.0, 1e-12);
    EXPECT_NEAR(grads.of(sq).item(), -lq * std::exp(-sq.item()) + 1.0, 1e-12);
  }
}

TEST(DistillationLoss, IdenticalStudentAndPerfectPose) {
  const LatentPair z{{0.3, -1.0, 2.0}, {0.0, 0.5, 0.25}};
  const Pose truth = Pose::make({1.0, 2.0, 3.0}, Quaternion{0.9, 0.1, 0.2, 0.3});
  const LossWeights w{0.4, -2.0};
  EXPECT_NEAR(distillation_loss(z, z, truth.x, truth.q, truth, w), w.s_x + w.s_q, kExact);
}

TEST(DistillationLoss, ZeroStudentAgainstUnitTeacher) {
  const LatentPair teacher{{0.6, 0.8, 0.0}, {0.0, 0.0, 1.0}};
  const LatentPair student{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  const Pose truth = Pose::make({0.0, 0.0, 0.0}, Quaternion{});
  const LossWeights w{0.0, -3.0};
  EXPECT_NEAR(distillation_loss(teacher, student, truth.x, truth.q, truth, w), 2.0 + w.s_x + w.s_q, kExact);
}

TEST(DistillationLoss, RejectsDimensionMismatch) {
  const LatentPair a{{1.0, 2.0}, {1.0, 2.0}};
  const LatentPair b{{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
  EXPECT_THROW(distillation_loss(a, b, {}, Quaternion{}, Pose{}, {}), ValidationError);
}

TEST(DistillationLossProperty, EqualsSumOfIndependentTerms) {
  SplitMix64 rng(24);
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  };
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.below(16);
    LatentPair t, s;
    for (std::size_t i = 0; i < d; ++i) {
      t.z_x.push_back(rng.normal());
      t.z_q.push_back(rng.normal());
      s.z_x.push_back(rng.normal());
      s.z_q.push_back(rng.normal());
    }
    const Pose truth = Pose::make(random_vec(rng, 5.0), random_unit_quaternion(rng));
    const Vec3 xd = random_vec(rng, 5.0);
    const Quaternion qd{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const LossWeights w{rng.uniform(-2.0, 2.0), rng.uniform(-4.0, 0.0)};
    const double lx = norm(truth.x - xd);
    const double n = qd.norm();
    const double lq = std::sqrt(std::pow(truth.q.w - qd.w / n, 2) + std::pow(truth.q.x - qd.x / n, 2) +
                                std::pow(truth.q.y - qd.y / n, 2) + std::pow(truth.q.z - qd.z / n, 2));
    const double expected = dist(t.z_x, s.z_x) + dist(t.z_q, s.z_q) + lx * std::exp(-w.s_x) + w.s_x +
                            lq * std::exp(-w.s_q) + w.s_q;
    EXPECT_NEAR(distillation_loss(t, s, xd, qd, truth, w), expected, 1e-10 * (1.0 + std::abs(expected)));
  }
}

// --- Quaternions and poses ------------------------------------------------------

TEST(AngularError, Examples) {
  const Quaternion q = Quaternion{0.3, -0.1, 0.9, 0.2}.normalized();
  EXPECT_NEAR(angular_error_deg(q, q), 0.0, kExact);
  EXPECT_NEAR(angular_error_deg(q, -q), 0.0, kExact);
  const Quaternion z90{std::cos(std::numbers::pi / 4), 0.0, 0.0, std::sin(std::numbers::pi / 4)};
  EXPECT_NEAR(angular_error_deg(z90, Quaternion{}), 90.0, kExact);
}

TEST(AngularErrorProperty, PseudometricOnSampledTriples) {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const Quaternion a = random_unit_quaternion(rng);
    const Quaternion b = random_unit_quaternion(rng);
    const Quaternion c = random_unit_quaternion(rng);
    const double ab = angular_error_deg(a, b);
    EXPECT_NEAR(ab, angular_error_deg(b, a), 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, angular_error_deg(a, c) + angular_error_deg(c, b) + 1e-9);
    EXPECT_NEAR(angular_error_deg(a, -b), ab, 1e-9);
  }
}

TEST(AngularErrorProperty, MatchesRotationAngle) {
  SplitMix64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const Quaternion q = random_unit_quaternion(rng);
    const double angle = rng.uniform(0.01, 3.1);
    const Quaternion r = q * Quaternion::from_axis_angle(random_vec(rng), angle);
    EXPECT_NEAR(angular_error_deg(q, r.normalized()), angle * 180.0 / std::numbers::pi, 1e-6);
  }
}

TEST(Quaternion, CanonicalSignMakesFirstNonzeroPositive) {
  EXPECT_EQ((Quaternion{-0.5, 0.5, 0.5, 0.5}.canonical()), (Quaternion{0.5, -0.5, -0.5, -0.5}));
  EXPECT_EQ((Quaternion{0.0, -1.0, 0.0, 0.0}.canonical()), (Quaternion{0.0, 1.0, 0.0, 0.0}));
  EXPECT_EQ((Quaternion{0.0, 0.0, 0.0, 1.0}.canonical()), (Quaternion{0.0, 0.0, 0.0, 1.0}));
}

TEST(Quaternion, NormalizeRejectsZero) {
  EXPECT_THROW(Quaternion({0.0, 0.0, 0.0, 0.0}).normalized(), NumericalError);
  EXPECT_THROW(Quaternion::from_array(std::vector<double>{1.0, 0.0, 0.0}), ValidationError);
}

TEST(Quaternion, AxisAngleRotatesAsExpected) {
  const Quaternion q = Quaternion::from_axis_angle({0.0, 0.0, 1.0}, std::numbers::pi / 2);
  const Vec3 r = rotate(q, {1.0, 0.0, 0.0});
  EXPECT_NEAR(r[0], 0.0, kExact);
  EXPECT_NEAR(r[1], 1.0, kExact);
  EXPECT_NEAR(r[2], 0.0, kExact);
}

TEST(QuaternionProperty, MatrixRoundTripAndComposition) {
  SplitMix64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const Quaternion a = random_unit_quaternion(rng);
    const Quaternion b = random_unit_quaternion(rng);
    const Quaternion back = Quaternion::from_matrix(a.to_matrix()).canonical();
    EXPECT_NEAR(angular_error_deg(a, back), 0.0, 1e-5);
    const Vec3 v = random_vec(rng);
    const Vec3 lhs = rotate(a * b, v);
    const Vec3 rhs = rotate(a, rotate(b, v));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-12);
    EXPECT_NEAR(norm(rotate(a, v)), norm(v), 1e-12);
  }
}

TEST(Pose, MakeNormalizesAndCanonicalizes) {
  const Pose p = Pose::make({1.0, 2.0, 3.0}, Quaternion{-2.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(p.q, (Quaternion{1.0, 0.0, 0.0, 0.0}));
  EXPECT_TRUE(p.valid());
  EXPECT_FALSE((Pose{{0.0, 0.0, 0.0}, Quaternion{-1.0, 0.0, 0.0, 0.0}}.valid()));
  EXPECT_FALSE((Pose{{0.0, 0.0, 0.0}, Quaternion{1.1, 0.0, 0.0, 0.0}}.valid()));
  EXPECT_FALSE((Pose{{std::nan(""), 0.0, 0.0}, Quaternion{}}.valid()));
}

TEST(LookAt, OpticalAxisPointsAtTarget) {
  SplitMix64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 eye = random_vec(rng, 20.0);
    const Vec3 target = random_vec(rng, 2.0);
    const Quaternion q = look_at(eye, target);
    const Vec3 forward = rotate(q, {0.0, 0.0, 1.0});
    const Vec3 dir = (1.0 / distance(target, eye)) * (target - eye);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(forward[i], dir[i], 1e-9);
  }
  EXPECT_THROW(look_at({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}), ValidationError);
}

TEST(LatentPair, ConcatenatesPositionThenOrientation) {
  const LatentPair z{{1.0, 2.0}, {3.0, 4.0}};
  EXPECT_EQ(z.concatenated(), (std::vector<double>{1.0, 2.0, 3.0, 4.0}));
  EXPECT_TRUE(z.valid());
  EXPECT_FALSE((LatentPair{{1.0}, {1.0, 2.0}}.valid()));
  EXPECT_FALSE((LatentPair{{std::nan("")}, {1.0}}.valid()));
}

// --- Metrics ---------------------------------------------------------------------

TEST(MedianReport, Examples) {
  const std::vector<PoseError> two{{1.0, 10.0}, {3.0, 20.0}};
  const MedianReport r2 = median_report(two);
  EXPECT_EQ(r2.position_m, 2.0);
  EXPECT_EQ(r2.orientation_deg, 15.0);
  EXPECT_EQ(r2.count, 2u);
  const std::vector<PoseError> one{{5.0, 1.0}};
  EXPECT_EQ(median_report(one).position_m, 5.0);
  EXPECT_THROW(median_report(std::vector<PoseError>{}), ValidationError);
}

TEST(MedianProperty, MatchesSortOracle) {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(1 + rng.below(40));
    for (double& x : v) x = rng.normal(0.0, 10.0);
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double expected = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    EXPECT_EQ(median(v), expected);
  }
}

TEST(PoseError, CombinesDistanceAndAngle) {
  const Pose truth = Pose::make({0.0, 0.0, 0.0}, Quaternion{});
  const Pose est = Pose::make({3.0, 4.0, 0.0}, Quaternion::from_axis_angle({1.0, 0.0, 0.0}, std::numbers::pi / 3));
  const PoseError e = pose_error(est, truth);
  EXPECT_NEAR(e.position_m, 5.0, kExact);
  EXPECT_NEAR(e.orientation_deg, 60.0, 1e-9);
}

}  // namespace
}  // namespace pae
