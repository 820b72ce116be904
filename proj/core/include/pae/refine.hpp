#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/dataset.hpp"
#include "pae/models.hpp"
#include "pae/rng.hpp"

namespace pae::refine {

/// Stored train poses (7 reals + scene id each), queried by position.
class PoseDatabase {
 public:
  PoseDatabase() = default;
  PoseDatabase(std::vector<Pose> poses, std::vector<int> scene_ids);
  static PoseDatabase from_split(const sim::Split& split);

  std::size_t size() const { return poses_.size(); }
  const Pose& pose(std::size_t i) const { return poses_.at(i); }
  int scene_id(std::size_t i) const { return scene_ids_.at(i); }

  /// Indices of the k entries nearest to `position`, by Euclidean distance
  /// with ties broken by ascending index. With `scene`, only that scene's
  /// entries are considered.
  std::vector<std::size_t> knn(const Vec3& position, std::size_t k, std::optional<int> scene = std::nullopt) const;

  nlohmann::json to_json() const;
  static PoseDatabase from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static PoseDatabase load(const std::filesystem::path& path);

 private:
  std::vector<Pose> poses_;
  std::vector<int> scene_ids_;
};

struct RefineConfig {
  std::size_t k = 3;
  std::size_t iterations = 3;
  std::size_t inner_steps = 100;
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  bool closed_form = false;

  void validate() const;
  nlohmann::json to_json() const;
  static RefineConfig from_json(const nlohmann::json& j);
};

struct AffineWeights {
  std::vector<double> a;
  double sum() const;
};

/// Euclidean projection onto the plane sum(a) = 1: w + ((1 - sum w) / k) * 1.
std::vector<double> project_affine(std::span<const double> w);

/// Encodings are the columns of E, each of the length of z_p.
using Encodings = std::vector<std::vector<double>>;

/// ||z_p - E a||.
double affine_objective(std::span<const double> z_p, const Encodings& columns, std::span<const double> a);

/// Exact minimizer of ||z_p - E a|| subject to sum(a) = 1 from the bordered
/// normal equations with 1e-8 damping on E^T E.
AffineWeights closed_form_affine_weights(std::span<const double> z_p, const Encodings& columns);

struct SolveResult {
  AffineWeights weights;
  /// Objective at the uniform start, then after every outer iteration.
  std::vector<double> trace;
};

/// AdamW on unconstrained w from the uniform start; every evaluation uses
/// the projected weights. With `cfg.closed_form` the KKT solution is
/// returned and the trace holds the start and final objectives.
SolveResult solve_affine_weights(std::span<const double> z_p, const Encodings& columns, const RefineConfig& cfg);

struct RefineResult {
  Vec3 x{};
  AffineWeights weights;
  std::vector<double> trace;
  std::vector<std::size_t> neighbors;
};

/// Concatenation (z_x, z_q) of a latent pair.
std::vector<double> stacked(const LatentPair& latent);

/// Affine position refinement of `query` over database entries `neighbors`,
/// each encoded by the PAE.
RefineResult refine_position(const LatentPair& query, std::span<const std::size_t> neighbors,
                             const PoseDatabase& db, const models::PaeModel& pae, const RefineConfig& cfg);

/// Refines an APR estimate: neighbors are retrieved around the APR position
/// and the query latent is the APR latent. Orientation is kept.
struct EstimateRefinement {
  Pose initial;
  Pose refined;
  RefineResult detail;
};
EstimateRefinement refine_apr_estimate(const models::AprModel& apr, std::span<const float> image, int scene_id,
                                       const PoseDatabase& db, const models::PaeModel& pae,
                                       const RefineConfig& cfg);

struct GuessOptions {
  double sigma = 1.0;
  double orientation_jitter_deg = 1.0;
};

struct GuessResult {
  Pose guess;
  Vec3 refined{};
  double initial_error = 0.0;
  double refined_error = 0.0;
};

/// Perturbs the ground truth position by isotropic Gaussian noise and the
/// orientation by a rotation of N(0, jitter) degrees about a random axis,
/// encodes the guess with the PAE, retrieves neighbors around the guessed
/// position and refines.
GuessResult refine_with_random_guess(const Pose& truth, int scene_id, const GuessOptions& options,
                                     const models::PaeModel& pae, const PoseDatabase& db, const RefineConfig& cfg,
                                     SplitMix64& rng);

/// normalize(sum a_i q_i) after flipping each q_i into the hemisphere of q_0.
/// Throws when the combination has norm below 1e-9.
Quaternion affine_orientation(std::span<const Quaternion> quaternions, std::span<const double> a);

/// Relative translation regressor: (reference image, query image, reference
/// pose) -> x_query - x_reference in the world frame.
using RelativeRegressor =
    std::function<Vec3(const sim::Image& reference, std::span<const float> query, const Pose& reference_pose)>;

RelativeRegressor rpr_regressor(const models::RprModel& rpr);

struct VirtualRprResult {
  Pose apr;
  Pose refined;
  std::size_t reference = 0;
};

/// APR estimate, nearest train pose, image decoded from its PAE encoding,
/// then x = x_ref + rpr(decoded, query). Orientation stays the APR's.
VirtualRprResult virtual_rpr_refine(std::span<const float> query_image, int scene_id, const models::AprModel& apr,
                                    const models::PaeModel& pae, const models::DecoderModel& decoder,
                                    const RelativeRegressor& rpr, const PoseDatabase& db);

}  // namespace pae::refine
