#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "pae/error.hpp"
#include "pae/evaluation.hpp"
#include "pae/refine.hpp"
#include "pae/rng.hpp"

namespace pae {
namespace {

using refine::Encodings;
using refine::PoseDatabase;
using refine::RefineConfig;

constexpr double kPi = 3.14159265358979323846;

Pose camera_at(const Vec3& eye) { return Pose::make(eye, look_at(eye, {0.0, 0.0, 0.0})); }

PoseDatabase random_database(std::size_t n, std::uint64_t seed, int scenes = 1) {
  SplitMix64 rng(seed);
  std::vector<Pose> poses;
  std::vector<int> ids;
  for (std::size_t i = 0; i < n; ++i) {
    poses.push_back(camera_at({rng.uniform(10, 25), rng.uniform(-10, 10), rng.uniform(1, 10)}));
    ids.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(scenes))));
  }
  return PoseDatabase(std::move(poses), std::move(ids));
}

struct Instance {
  std::vector<double> z_p;
  Encodings columns;
};

// Latent-like instance: z_p is an affine combination of the columns plus noise.
Instance random_instance(SplitMix64& rng, std::size_t k = 3, std::size_t length = 128) {
  Instance inst;
  inst.columns.assign(k, std::vector<double>(length));
  for (auto& c : inst.columns) {
    for (double& v : c) v = rng.normal();
  }
  std::vector<double> a(k);
  for (double& v : a) v = 1.0 / static_cast<double>(k) + 0.5 * rng.normal();
  a = refine::project_affine(a);
  inst.z_p.assign(length, 0.0);
  for (std::size_t r = 0; r < length; ++r) {
    for (std::size_t i = 0; i < k; ++i) inst.z_p[r] += a[i] * inst.columns[i][r];
    inst.z_p[r] += 0.1 * rng.normal();
  }
  return inst;
}

// Columns and target drawn independently from N(0, 1).
Instance iid_instance(SplitMix64& rng, std::size_t k = 3, std::size_t length = 128) {
  Instance inst;
  inst.columns.assign(k, std::vector<double>(length));
  for (auto& c : inst.columns) {
    for (double& v : c) v = rng.normal();
  }
  inst.z_p.resize(length);
  for (double& v : inst.z_p) v = rng.normal();
  return inst;
}

// Constraint elimination a = e_0 + N b with a least-squares solve in b.
double eliminated_optimum(const Instance& inst) {
  const auto k = static_cast<Eigen::Index>(inst.columns.size());
  const auto m = static_cast<Eigen::Index>(inst.z_p.size());
  Eigen::MatrixXd e(m, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index r = 0; r < m; ++r) e(r, i) = inst.columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
  }
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(k, k - 1);
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    n(0, j) = -1.0;
    n(j + 1, j) = 1.0;
  }
  const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(inst.z_p.data(), m);
  const Eigen::VectorXd b = (e * n).colPivHouseholderQr().solve(z - e.col(0));
  return (z - e.col(0) - e * n * b).norm();
}

models::PaeModel small_pae() {
  models::PaeConfig c;
  c.latent_dim = 32;
  c.fourier_levels = 3;
  c.widths = {32, 32, 32};
  c.position_scale = 25.0;
  return models::PaeModel(c, 7);
}

TEST(Knn, QueryEqualToEntryComesFirst) {
  const PoseDatabase db = random_database(30, 1);
  for (std::size_t i : {0u, 7u, 29u}) EXPECT_EQ(db.knn(db.pose(i).x, 3).front(), i);
}

TEST(Knn, FullSizeReturnsAllSortedByDistance) {
  const PoseDatabase db = random_database(20, 2);
  const Vec3 query{18.0, 2.0, 4.0};
  const auto all = db.knn(query, db.size());
  ASSERT_EQ(all.size(), db.size());
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_LE(distance(db.pose(all[i - 1]).x, query), distance(db.pose(all[i]).x, query));
  }
  std::vector<std::size_t> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Knn, MatchesExhaustiveSortOracle) {
  const PoseDatabase db = random_database(50, 3);
  SplitMix64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 q{rng.uniform(5, 30), rng.uniform(-15, 15), rng.uniform(-2, 12)};
    std::vector<std::size_t> order(db.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return distance(db.pose(a).x, q) < distance(db.pose(b).x, q);
    });
    order.resize(5);
    EXPECT_EQ(db.knn(q, 5), order);
  }
}

TEST(Knn, TiesBreakByAscendingIndex) {
  const Pose p = camera_at({20, 0, 0});
  const PoseDatabase db({camera_at({22, 0, 0}), p, camera_at({18, 0, 0}), p}, {0, 0, 0, 0});
  EXPECT_EQ(db.knn({20, 0, 0}, 4), (std::vector<std::size_t>{1, 3, 0, 2}));
}

TEST(Knn, SceneFilterAndOversizedKRejected) {
  const PoseDatabase db = random_database(40, 4, 3);
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i : db.knn({15, 0, 5}, 4, s)) EXPECT_EQ(db.scene_id(i), s);
  }
  EXPECT_THROW(db.knn({0, 0, 0}, 41), ValidationError);
  std::size_t n0 = 0;
  for (std::size_t i = 0; i < db.size(); ++i) n0 += db.scene_id(i) == 0;
  EXPECT_THROW(db.knn({0, 0, 0}, n0 + 1, 0), ValidationError);
}

TEST(Database, RejectsInvalidPosesAndMismatchedIds) {
  Pose bad = camera_at({20, 0, 0});
  bad.q = Quaternion{2.0, 0.0, 0.0, 0.0};
  EXPECT_THROW(PoseDatabase({bad}, {0}), ValidationError);
  EXPECT_THROW(PoseDatabase({camera_at({20, 0, 0})}, {0, 1}), ValidationError);
}

TEST(Database, JsonRoundTripIsExactAndEntriesHoldSevenRealsAndScene) {
  const PoseDatabase db = random_database(25, 5, 3);
  const auto j = db.to_json();
  ASSERT_EQ(j.size(), 25u);
  for (const auto& e : j) {
    EXPECT_EQ(e.size(), 3u);
    EXPECT_EQ(e.at("x").size(), 3u);
    EXPECT_EQ(e.at("q").size(), 4u);
    EXPECT_TRUE(e.at("scene").is_number_integer());
  }
  const PoseDatabase back = PoseDatabase::from_json(j);
  for (std::size_t i = 0; i < db.size(); ++i) {
    EXPECT_EQ(back.pose(i), db.pose(i));
    EXPECT_EQ(back.scene_id(i), db.scene_id(i));
  }
}

TEST(Database, FileSizeGrowsLinearlyWithEntries) {
  const auto dir = std::filesystem::temp_directory_path() / "pae_refine_db";
  std::filesystem::create_directories(dir);
  const PoseDatabase db = random_database(400, 6);
  std::vector<double> per_entry;
  for (std::size_t n : {100u, 200u, 400u}) {
    std::vector<Pose> poses;
    std::vector<int> ids;
    for (std::size_t i = 0; i < n; ++i) {
      poses.push_back(db.pose(i));
      ids.push_back(db.scene_id(i));
    }
    const auto path = dir / ("db" + std::to_string(n) + ".json");
    PoseDatabase(poses, ids).save(path);
    per_entry.push_back(static_cast<double>(std::filesystem::file_size(path)) / static_cast<double>(n));
    EXPECT_EQ(PoseDatabase::load(path).size(), n);
  }
  std::filesystem::remove_all(dir);
  for (double b : per_entry) EXPECT_NEAR(b, per_entry.back(), 0.05 * per_entry.back());
  EXPECT_LT(per_entry.back(), 300.0);
}

TEST(RefineConfig, ValidatesAndRoundTrips) {
  RefineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.k = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RefineConfig{};
  c.inner_steps = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = RefineConfig{};
  c.k = 5;
  c.closed_form = true;
  const RefineConfig back = RefineConfig::from_json(c.to_json());
  EXPECT_EQ(back.k, 5u);
  EXPECT_TRUE(back.closed_form);
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(ProjectAffine, SumsToOneIsIdempotentAndIsTheClosestPoint) {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> w(2 + rng.below(5));
    for (double& v : w) v = rng.normal(0.0, 3.0);
    const auto a = refine::project_affine(w);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-12);
    const auto again = refine::project_affine(a);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(again[i], a[i], 1e-12);
    auto dist = [&](const std::vector<double>& p) {
      double s = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) s += (p[i] - w[i]) * (p[i] - w[i]);
      return s;
    };
    for (int probe = 0; probe < 20; ++probe) {
      std::vector<double> other(w.size());
      for (double& v : other) v = rng.normal();
      EXPECT_LE(dist(a), dist(refine::project_affine(other)) + 1e-12);
    }
  }
}

TEST(ClosedForm, OrthogonalColumnsGiveOneHot) {
  Encodings cols(3, std::vector<double>(6, 0.0));
  for (std::size_t i = 0; i < 3; ++i) cols[i][2 * i] = 1.0 + static_cast<double>(i);
  for (std::size_t j = 0; j < 3; ++j) {
    const auto a = refine::closed_form_affine_weights(cols[j], cols).a;
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], i == j ? 1.0 : 0.0, 1e-6);
  }
}

TEST(ClosedForm, IdenticalColumnsGiveUniformWeights) {
  const std::vector<double> c{0.3, -1.0, 2.0, 0.5};
  const Encodings cols(4, c);
  const auto a = refine::closed_form_affine_weights(std::vector<double>{1.0, 1.0, 1.0, 1.0}, cols).a;
  // 1e-8 damping against entries of 5.3 leaves a condition number near 1e9.
  for (double v : a) EXPECT_NEAR(v, 0.25, 1e-6);
}

TEST(ClosedForm, BeatsRandomConstraintSatisfyingSamples) {
  SplitMix64 rng(13);
  const Instance inst = random_instance(rng);
  const auto a = refine::closed_form_affine_weights(inst.z_p, inst.columns);
  EXPECT_NEAR(a.sum(), 1.0, 1e-9);
  const double best = refine::affine_objective(inst.z_p, inst.columns, a.a);
  for (int s = 0; s < 10000; ++s) {
    std::vector<double> w(3);
    for (double& v : w) v = rng.normal(1.0 / 3.0, 1.0);
    EXPECT_LE(best, refine::affine_objective(inst.z_p, inst.columns, refine::project_affine(w)) + 1e-12);
  }
  EXPECT_NEAR(best, eliminated_optimum(inst), 1e-6 * (1.0 + best));
}

TEST(ClosedForm, RejectsNonFiniteInput) {
  Encodings cols(2, std::vector<double>(3, 1.0));
  cols[1][0] = std::nan("");
  EXPECT_THROW(refine::closed_form_affine_weights(std::vector<double>{1.0, 1.0, 1.0}, cols), NumericalError);
}

TEST(IterativeSolver, WithinFivePercentOfOptimumAndWeightsSumToOne) {
  SplitMix64 rng(14);
  const RefineConfig cfg;
  for (int trial = 0; trial < 25; ++trial) {
    const Instance inst = iid_instance(rng);
    const auto result = refine::solve_affine_weights(inst.z_p, inst.columns, cfg);
    EXPECT_LT(std::abs(result.weights.sum() - 1.0), 1e-9);
    const double optimum = eliminated_optimum(inst);
    EXPECT_LE(result.trace.back(), 1.05 * optimum) << "trial " << trial;
    ASSERT_EQ(result.trace.size(), cfg.iterations + 1);
    EXPECT_NEAR(result.trace.back(), refine::affine_objective(inst.z_p, inst.columns, result.weights.a), 1e-9);
  }
}

TEST(IterativeSolver, TraceIsNonIncreasingAndStartsUniform) {
  SplitMix64 rng(15);
  const Instance inst = random_instance(rng);
  const auto result = refine::solve_affine_weights(inst.z_p, inst.columns, RefineConfig{});
  const std::vector<double> uniform(3, 1.0 / 3.0);
  EXPECT_NEAR(result.trace.front(), refine::affine_objective(inst.z_p, inst.columns, uniform), 1e-12);
  for (std::size_t i = 1; i < result.trace.size(); ++i) EXPECT_LE(result.trace[i], result.trace[i - 1] + 1e-6);
}

TEST(RefinePosition, SharedNeighbourPositionIsReturnedExactly) {
  const models::PaeModel pae = small_pae();
  const Vec3 x{20.0, 3.0, 6.0};
  const PoseDatabase db({Pose::make(x, look_at(x, {0, 0, 0})), Pose::make(x, look_at(x, {0, 5, 0})),
                         Pose::make(x, look_at(x, {0, -5, 2}))},
                        {0, 0, 0});
  const LatentPair query = pae.forward(camera_at({15.0, -4.0, 2.0}));
  const std::vector<std::size_t> nb{0, 1, 2};
  const auto r = refine::refine_position(query, nb, db, pae, RefineConfig{});
  EXPECT_LT(distance(r.x, x), 1e-12);
  EXPECT_EQ(r.neighbors, nb);
}

TEST(RefinePosition, QueryEqualToNeighbourEncodingRecoversThatNeighbour) {
  const models::PaeModel pae = small_pae();
  const PoseDatabase db({camera_at({20, 0, 5}), camera_at({15, 10, 3}), camera_at({18, -8, 7})}, {0, 0, 0});
  const std::vector<std::size_t> nb{0, 1, 2};
  const double extent = 10.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const LatentPair query = pae.forward(db.pose(j));
    RefineConfig closed;
    closed.closed_form = true;
    const auto exact = refine::refine_position(query, nb, db, pae, closed);
    EXPECT_NEAR(exact.weights.a[j], 1.0, 1e-6);
    // The default budget stops on the way; 3 x 1000 steps converge.
    RefineConfig converged;
    converged.inner_steps = 1000;
    const auto iterative = refine::refine_position(query, nb, db, pae, converged);
    EXPECT_LT(distance(iterative.x, db.pose(j).x), 1e-2 * extent) << "neighbour " << j;
    EXPECT_LT(std::abs(iterative.weights.sum() - 1.0), 1e-9);
    const auto partial = refine::refine_position(query, nb, db, pae, RefineConfig{});
    const Vec3 centroid = (1.0 / 3.0) * (db.pose(0).x + db.pose(1).x + db.pose(2).x);
    EXPECT_LT(distance(partial.x, db.pose(j).x), distance(centroid, db.pose(j).x));
  }
}

TEST(RefineApr, KeepsOrientationAndUsesNeighboursOfTheEstimate) {
  sim::DatasetConfig dc;
  dc.n_train = 30;
  dc.n_test = 3;
  dc.resolution = 16;
  dc.seed = 3;
  const sim::Dataset ds = sim::build_dataset(dc);
  models::AprConfig ac;
  ac.resolution = 16;
  ac.latent_dim = 32;
  ac.trunk_width = 32;
  const models::AprModel apr(ac, 1);
  const models::PaeModel pae = small_pae();
  const PoseDatabase db = PoseDatabase::from_split(ds.train);
  const auto r = refine::refine_apr_estimate(apr, ds.test.image(0), 0, db, pae, RefineConfig{});
  EXPECT_EQ(r.refined.q, r.initial.q);
  EXPECT_EQ(r.detail.neighbors, db.knn(r.initial.x, 3, 0));
  Vec3 combined{0, 0, 0};
  for (std::size_t i = 0; i < 3; ++i) combined = combined + r.detail.weights.a[i] * db.pose(r.detail.neighbors[i]).x;
  EXPECT_LT(distance(combined, r.refined.x), 1e-12);
}

TEST(RandomGuess, VanishingSigmaGivesVanishingInitialErrorAndIsDeterministic) {
  const models::PaeModel pae = small_pae();
  const PoseDatabase db = random_database(30, 8);
  const Pose truth = camera_at({17, 2, 4});
  refine::GuessOptions tiny;
  tiny.sigma = 1e-12;
  SplitMix64 rng(1);
  EXPECT_LT(refine::refine_with_random_guess(truth, 0, tiny, pae, db, RefineConfig{}, rng).initial_error, 1e-10);

  refine::GuessOptions opts;
  SplitMix64 r1(5), r2(5);
  const auto a = refine::refine_with_random_guess(truth, 0, opts, pae, db, RefineConfig{}, r1);
  const auto b = refine::refine_with_random_guess(truth, 0, opts, pae, db, RefineConfig{}, r2);
  EXPECT_EQ(a.guess, b.guess);
  EXPECT_EQ(a.refined, b.refined);
  EXPECT_EQ(a.refined_error, b.refined_error);
  EXPECT_NEAR(a.initial_error, distance(a.guess.x, truth.x), 1e-12);
  EXPECT_NEAR(a.refined_error, distance(a.refined, truth.x), 1e-12);
}

TEST(AffineOrientation, EqualInputsOneHotAndSignAlignment) {
  const Quaternion q = Quaternion::from_axis_angle({0.2, 0.5, 1.0}, 0.7);
  const std::vector<Quaternion> same{q, q, q};
  const std::vector<double> a{0.2, 0.5, 0.3};
  EXPECT_LT(angular_error_deg(refine::affine_orientation(same, a), q), 1e-6);

  const std::vector<Quaternion> mixed{q, -Quaternion::from_axis_angle({1, 0, 0}, 0.3),
                                      Quaternion::from_axis_angle({0, 1, 0}, 1.1)};
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> onehot(3, 0.0);
    onehot[j] = 1.0;
    const Quaternion r = refine::affine_orientation(mixed, onehot);
    EXPECT_NEAR(std::abs(dot(r, mixed[j])), 1.0, 1e-12);
  }
  const std::vector<Quaternion> flipped{q, -q};
  EXPECT_LT(angular_error_deg(refine::affine_orientation(flipped, std::vector<double>{0.5, 0.5}), q), 1e-6);
}

TEST(AffineOrientation, MidpointOfTenDegreePairIsTheSlerpMidpoint) {
  const Vec3 axis{0.0, 0.6, 0.8};
  const Quaternion q1 = Quaternion::from_axis_angle(axis, 0.3);
  const Quaternion q2 = q1 * Quaternion::from_axis_angle(axis, 10.0 * kPi / 180.0);
  const std::vector<Quaternion> qs{q1, q2};
  const Quaternion mid = refine::affine_orientation(qs, std::vector<double>{0.5, 0.5});
  const Quaternion slerp = q1 * Quaternion::from_axis_angle(axis, 5.0 * kPi / 180.0);
  EXPECT_LT(angular_error_deg(mid, slerp), 1e-6);
  EXPECT_NEAR(angular_error_deg(mid, q1), 5.0, 1e-6);
  EXPECT_NEAR(angular_error_deg(mid, q2), 5.0, 1e-6);
}

TEST(AffineOrientation, CancellationIsRejected) {
  const Quaternion q = Quaternion::from_axis_angle({0, 0, 1}, 0.4);
  const std::vector<Quaternion> qs{q, q};
  EXPECT_THROW(refine::affine_orientation(qs, std::vector<double>{1.0 - 1e-3, 1e-3 - 1.0}), NumericalError);
}

TEST(VirtualRpr, OracleRegressorRecoversGroundTruthPosition) {
  sim::DatasetConfig dc;
  dc.n_train = 30;
  dc.n_test = 5;
  dc.resolution = 16;
  dc.seed = 6;
  const sim::Dataset ds = sim::build_dataset(dc);
  models::AprConfig ac;
  ac.resolution = 16;
  ac.latent_dim = 32;
  ac.trunk_width = 32;
  const models::AprModel apr(ac, 2);
  const models::PaeModel pae = small_pae();
  models::DecoderConfig dec;
  dec.latent_dim = 32;
  dec.resolution = 16;
  dec.widths = {16, 16, 16};
  const models::DecoderModel decoder(dec, 3);
  const PoseDatabase db = PoseDatabase::from_split(ds.train);

  for (std::size_t i = 0; i < ds.test.size(); ++i) {
    const Pose truth = ds.test.poses[i];
    std::size_t calls = 0;
    const refine::RelativeRegressor oracle = [&](const sim::Image& reference, std::span<const float>,
                                                 const Pose& reference_pose) {
      ++calls;
      EXPECT_EQ(reference.resolution, 16u);
      return truth.x - reference_pose.x;
    };
    const auto r = refine::virtual_rpr_refine(ds.test.image(i), 0, apr, pae, decoder, oracle, db);
    EXPECT_EQ(calls, 1u);
    EXPECT_LT(distance(r.refined.x, truth.x), 1e-12);
    EXPECT_EQ(r.refined.q, r.apr.q);
    EXPECT_EQ(r.reference, db.knn(r.apr.x, 1, 0).front());
  }
}

}  // namespace
}  // namespace pae
