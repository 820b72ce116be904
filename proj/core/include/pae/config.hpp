#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/dataset.hpp"
#include "pae/models.hpp"
#include "pae/refine.hpp"
#include "pae/training.hpp"

namespace pae::config {

struct GuessSettings {
  double sigma_fraction = 0.1;
  double orientation_jitter_deg = 1.0;
  std::size_t trials = 100;
};

/// Every tunable of a run as one JSON document. Values loaded from a file or
/// set with `key=value` must name an existing key and keep its type.
class RunConfig {
 public:
  RunConfig();

  static nlohmann::json defaults();
  static RunConfig from_json(const nlohmann::json& overrides);
  static RunConfig load(const std::filesystem::path& path);

  /// Applies "dotted.key=value"; the value is parsed as JSON when possible
  /// and taken as a string otherwise.
  void set(std::string_view assignment);

  const nlohmann::json& values() const { return values_; }
  std::string digest() const;
  /// Digest of the settings that determine one model's checkpoint.
  std::string model_digest(std::string_view model) const;

  std::string name() const;
  std::filesystem::path run_dir() const;
  std::uint64_t seed() const;
  std::size_t latent_dim() const;

  sim::DatasetConfig dataset() const;
  models::AprConfig apr() const;
  models::PaeConfig pae(double position_scale) const;
  models::DecoderConfig decoder() const;
  models::RprConfig rpr() const;
  /// `model` is one of apr, pae, decoder, rpr.
  train::TrainConfig training(std::string_view model) const;
  refine::RefineConfig refine() const;
  GuessSettings guess() const;
  double decoder_offset_fraction() const;
  std::vector<std::size_t> ablation_levels() const;

 private:
  nlohmann::json values_;
};

/// Merges `overrides` into `base`, rejecting unknown keys and type changes.
/// `path` prefixes error messages.
void merge_strict(nlohmann::json& base, const nlohmann::json& overrides, const std::string& path = "");

}  // namespace pae::config
