#pragma once

#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/dataset.hpp"
#include "pae/metrics.hpp"
#include "pae/models.hpp"

namespace pae::eval {

struct PoseEvaluation {
  std::vector<Pose> estimates;
  std::vector<PoseError> errors;
  MedianReport median;
  std::map<int, MedianReport> per_scene;
};

/// Errors of `estimates` against the split's ground truth.
PoseEvaluation summarize(std::vector<Pose> estimates, const sim::Split& split);

PoseEvaluation evaluate_apr(const models::AprModel& apr, const sim::Split& split);

/// PAE latents of the ground-truth poses decoded by the teacher heads.
PoseEvaluation evaluate_pae(const models::PaeModel& pae, const models::AprModel& teacher, const sim::Split& split);

sim::Image decode_image(const models::DecoderModel& decoder, const models::PaeModel& pae, const Pose& pose,
                        int scene_id);

struct DecoderEvaluation {
  double mean_l1 = 0.0;
  /// Median over samples of L1(decoded, render of the same pose).
  double median_l1_same = 0.0;
  /// Median over samples of L1(decoded, render of a pose `offset` metres away).
  double median_l1_far = 0.0;
};

/// The far pose keeps the orientation and moves the position by `offset`
/// metres in a direction drawn from `seed`.
DecoderEvaluation evaluate_decoder(const models::DecoderModel& decoder, const models::PaeModel& pae,
                                   const sim::Dataset& dataset, const sim::Split& split, double offset,
                                   std::uint64_t seed);

nlohmann::json to_json(const MedianReport& report);
nlohmann::json to_json(const PoseEvaluation& evaluation);

}  // namespace pae::eval
