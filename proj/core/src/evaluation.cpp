#include "pae/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "pae/error.hpp"
#include "pae/rng.hpp"

namespace pae::eval {

using nlohmann::json;

PoseEvaluation summarize(std::vector<Pose> estimates, const sim::Split& split) {
  if (estimates.size() != split.size()) {
    throw ValidationError("summarize: " + std::to_string(estimates.size()) + " estimates for " +
                          std::to_string(split.size()) + " samples");
  }
  PoseEvaluation out;
  out.estimates = std::move(estimates);
  std::map<int, std::vector<PoseError>> by_scene;
  for (std::size_t i = 0; i < split.size(); ++i) {
    out.errors.push_back(pose_error(out.estimates[i], split.poses[i]));
    by_scene[split.scene_ids[i]].push_back(out.errors.back());
  }
  out.median = median_report(out.errors);
  for (const auto& [scene, errors] : by_scene) out.per_scene[scene] = median_report(errors);
  return out;
}

PoseEvaluation evaluate_apr(const models::AprModel& apr, const sim::Split& split) {
  std::vector<Pose> estimates;
  estimates.reserve(split.size());
  for (const auto& o : apr.forward_batch(split.images)) estimates.push_back(o.pose);
  return summarize(std::move(estimates), split);
}

PoseEvaluation evaluate_pae(const models::PaeModel& pae, const models::AprModel& teacher, const sim::Split& split) {
  std::vector<Pose> estimates;
  estimates.reserve(split.size());
  for (const auto& latent : pae.forward_batch(split.poses, split.scene_ids)) {
    estimates.push_back(teacher.decode(latent));
  }
  return summarize(std::move(estimates), split);
}

sim::Image decode_image(const models::DecoderModel& decoder, const models::PaeModel& pae, const Pose& pose,
                        int scene_id) {
  return decoder.decode(pae.forward(pose, scene_id));
}

DecoderEvaluation evaluate_decoder(const models::DecoderModel& decoder, const models::PaeModel& pae,
                                   const sim::Dataset& dataset, const sim::Split& split, double offset,
                                   std::uint64_t seed) {
  if (split.size() == 0) throw ValidationError("evaluate_decoder: empty split");
  DecoderEvaluation out;
  std::vector<double> same, far;
  SplitMix64 rng(seed);
  double total = 0.0;
  const auto latents = pae.forward_batch(split.poses, split.scene_ids);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const sim::Image decoded = decoder.decode(latents[i]);
    const sim::Image truth = split.image_copy(i);
    const double l1 = sim::mean_abs_difference(decoded, truth);
    total += l1;
    same.push_back(l1);

    Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
    while (norm(dir) < 1e-9) dir = Vec3{rng.normal(), rng.normal(), rng.normal()};
    const Vec3 moved = split.poses[i].x + (offset / norm(dir)) * dir;
    const Pose other{moved, split.poses[i].q};
    const sim::Image other_render = sim::render(dataset.scene(split.scene_ids[i]), other, split.resolution);
    far.push_back(sim::mean_abs_difference(decoded, other_render));
  }
  out.mean_l1 = total / static_cast<double>(split.size());
  out.median_l1_same = median(same);
  out.median_l1_far = median(far);
  return out;
}

json to_json(const MedianReport& report) {
  return json{{"median_position_m", report.position_m},
              {"median_orientation_deg", report.orientation_deg},
              {"count", report.count}};
}

json to_json(const PoseEvaluation& evaluation) {
  json j = to_json(evaluation.median);
  json scenes = json::object();
  for (const auto& [scene, report] : evaluation.per_scene) scenes[std::to_string(scene)] = to_json(report);
  j["per_scene"] = std::move(scenes);
  return j;
}

}  // namespace pae::eval
