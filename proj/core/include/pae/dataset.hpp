#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/scene.hpp"

namespace pae::sim {

struct DatasetConfig {
  std::size_t n_scenes = 1;
  /// Per-scene sample counts.
  std::size_t n_train = 400;
  std::size_t n_test = 100;
  std::size_t resolution = 32;
  std::uint64_t seed = 0;
  std::size_t n_landmarks = 48;
  double extent = 10.0;
  double landmark_radius = 1.5;
  double focal_ratio = 1.0;
  std::string sampling = "orbit-shell";
  ShellOptions shell;

  nlohmann::json to_json() const;
  static DatasetConfig from_json(const nlohmann::json& j);
};

/// One split with images stored contiguously, sample-major.
struct Split {
  std::size_t resolution = 0;
  std::vector<Pose> poses;
  std::vector<int> scene_ids;
  std::vector<float> images;

  std::size_t size() const { return poses.size(); }
  std::size_t image_size() const { return resolution * resolution * 3; }
  std::span<const float> image(std::size_t i) const;
  Image image_copy(std::size_t i) const;
};

struct Dataset {
  DatasetConfig config;
  std::vector<SceneSpec> scenes;
  Split train;
  Split test;

  const SceneSpec& scene(int scene_id) const;
  /// Digest of the generating configuration.
  std::string digest() const;
};

/// Renders every train and test sample. Scenes are generated from streams
/// derived from `config.seed`; test poses come from a separate stream and are
/// pose-disjoint from train.
Dataset build_dataset(const DatasetConfig& config);

/// Writes meta.json, {train,test}.images.bin and {train,test}.poses.json.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json pose_to_json(const Pose& pose, int scene_id);
Pose pose_from_json(const nlohmann::json& j, int* scene_id = nullptr);
nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& j);

}  // namespace pae::sim
