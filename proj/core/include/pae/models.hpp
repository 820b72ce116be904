#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/fourier.hpp"
#include "pae/layers.hpp"
#include "pae/losses.hpp"
#include "pae/pose.hpp"
#include "pae/scene.hpp"

namespace pae::models {

// ---------------------------------------------------------------------------
// Teacher: absolute pose regressor
// ---------------------------------------------------------------------------

struct AprConfig {
  std::size_t resolution = 32;
  std::size_t latent_dim = 64;
  std::size_t trunk_width = 256;
  /// Multiplies the init bound of the two branch layers.
  double branch_init_gain = 1.0;
  LossWeights initial_weights{};

  nlohmann::json to_json() const;
  static AprConfig from_json(const nlohmann::json& j);
};

/// Image trunk shared by both branches, one affine+ReLU branch per output
/// producing z_x and z_q, and single affine heads regressing x and raw q.
/// The learnable loss weights s_x, s_q live in the same parameter list.
class AprModel {
 public:
  static constexpr const char* kKind = "apr";

  explicit AprModel(const AprConfig& config, std::uint64_t seed = 0);

  struct Nodes {
    ad::NodeId z_x;
    ad::NodeId z_q;
    ad::NodeId x;
    ad::NodeId q_raw;
  };
  /// `images` is [B, 3*H*W].
  Nodes build(ad::Graph& g, ad::NodeId images) const;
  ad::NodeId regress_x(ad::Graph& g, ad::NodeId z_x) const;
  ad::NodeId regress_q(ad::Graph& g, ad::NodeId z_q) const;
  ad::NodeId s_x(ad::Graph& g) const;
  ad::NodeId s_q(ad::Graph& g) const;

  struct Output {
    LatentPair latent;
    Pose pose;
    Quaternion raw_q;
  };
  /// Single image. Throws on resolution mismatch.
  Output forward(std::span<const float> image) const;
  /// Contiguous batch of images.
  std::vector<Output> forward_batch(std::span<const float> images) const;

  /// Decodes a latent pair through the regressor heads. The returned pose has
  /// a normalized, canonical quaternion.
  Pose decode(const LatentPair& latent) const;

  LossWeights loss_weights() const;
  const AprConfig& config() const { return config_; }
  nlohmann::json config_json() const { return config_.to_json(); }
  ad::ParameterList& params() { return params_; }
  const ad::ParameterList& params() const { return params_; }
  std::size_t input_size() const { return config_.resolution * config_.resolution * 3; }

 private:
  AprConfig config_;
  ad::ParameterList params_;
  nn::Mlp trunk_;
  nn::Mlp branch_x_;
  nn::Mlp branch_q_;
  nn::Linear head_x_;
  nn::Linear head_q_;
  std::size_t s_x_ = 0;
  std::size_t s_q_ = 0;
};

// ---------------------------------------------------------------------------
// Student: camera pose auto-encoder
// ---------------------------------------------------------------------------

struct PaeConfig {
  std::size_t latent_dim = 64;
  std::size_t fourier_levels = 6;
  std::vector<std::size_t> widths{64, 128, 256};
  /// 0 or 1 means single-scene (no scene code is appended).
  std::size_t n_scenes = 1;
  /// Positions are divided by this before encoding.
  double position_scale = 1.0;

  bool multi_scene() const { return n_scenes > 1; }
  nlohmann::json to_json() const;
  static PaeConfig from_json(const nlohmann::json& j);
};

/// Two MLPs over Fourier features: one for position, one for orientation.
/// Multi-scene models append the encoding of the scene index to both inputs.
class PaeModel {
 public:
  static constexpr const char* kKind = "pae";

  explicit PaeModel(const PaeConfig& config, std::uint64_t seed = 0);

  struct Nodes {
    ad::NodeId z_x;
    ad::NodeId z_q;
  };
  Nodes build(ad::Graph& g, std::span<const Pose> poses, std::span<const int> scene_ids) const;

  LatentPair forward(const Pose& pose, int scene_id = 0) const;
  std::vector<LatentPair> forward_batch(std::span<const Pose> poses, std::span<const int> scene_ids) const;

  /// Encoded network inputs, [B, in_x] and [B, in_q].
  ad::Tensor position_inputs(std::span<const Pose> poses, std::span<const int> scene_ids) const;
  ad::Tensor orientation_inputs(std::span<const Pose> poses, std::span<const int> scene_ids) const;
  std::size_t position_input_dim() const;
  std::size_t orientation_input_dim() const;

  const PaeConfig& config() const { return config_; }
  nlohmann::json config_json() const { return config_.to_json(); }
  ad::ParameterList& params() { return params_; }
  const ad::ParameterList& params() const { return params_; }

 private:
  void check_scene(int scene_id) const;
  void append_scene_code(int scene_id, std::vector<double>& out) const;

  PaeConfig config_;
  FourierSpec fourier_;
  ad::ParameterList params_;
  nn::Mlp mlp_x_;
  nn::Mlp mlp_q_;
};

// ---------------------------------------------------------------------------
// Image decoder
// ---------------------------------------------------------------------------

enum class LatentCombine { kSum, kConcat };

struct DecoderConfig {
  std::size_t latent_dim = 64;
  std::size_t resolution = 32;
  std::vector<std::size_t> widths{512, 1024, 2048};
  LatentCombine combine = LatentCombine::kSum;

  nlohmann::json to_json() const;
  static DecoderConfig from_json(const nlohmann::json& j);
};

/// MLP from a combined pose latent to an H x W x 3 image. The final layer is
/// affine; outputs are clamped to [0, 1] only when producing an Image.
class DecoderModel {
 public:
  static constexpr const char* kKind = "decoder";

  explicit DecoderModel(const DecoderConfig& config, std::uint64_t seed = 0);

  ad::NodeId combine(ad::Graph& g, ad::NodeId z_x, ad::NodeId z_q) const;
  /// Unclamped pixels, [B, 3*H*W].
  ad::NodeId build(ad::Graph& g, ad::NodeId z_x, ad::NodeId z_q) const;
  sim::Image decode(const LatentPair& latent) const;

  const DecoderConfig& config() const { return config_; }
  nlohmann::json config_json() const { return config_.to_json(); }
  ad::ParameterList& params() { return params_; }
  const ad::ParameterList& params() const { return params_; }

 private:
  DecoderConfig config_;
  ad::ParameterList params_;
  nn::Mlp mlp_;
};

// ---------------------------------------------------------------------------
// Siamese relative translation regressor
// ---------------------------------------------------------------------------

struct RprConfig {
  std::size_t resolution = 32;
  std::size_t latent_dim = 64;
  std::size_t trunk_width = 256;

  nlohmann::json to_json() const;
  static RprConfig from_json(const nlohmann::json& j);
};

/// The same image trunk runs on both inputs; the concatenated features pass
/// through two affine+ReLU layers and an affine head giving x_b - x_a in the
/// world frame.
class RprModel {
 public:
  static constexpr const char* kKind = "rpr";

  explicit RprModel(const RprConfig& config, std::uint64_t seed = 0);

  ad::NodeId build(ad::Graph& g, ad::NodeId images_a, ad::NodeId images_b) const;
  Vec3 predict(std::span<const float> image_a, std::span<const float> image_b) const;

  const RprConfig& config() const { return config_; }
  nlohmann::json config_json() const { return config_.to_json(); }
  ad::ParameterList& params() { return params_; }
  const ad::ParameterList& params() const { return params_; }
  std::size_t input_size() const { return config_.resolution * config_.resolution * 3; }

 private:
  RprConfig config_;
  ad::ParameterList params_;
  nn::Mlp trunk_;
  nn::Mlp fuse_;
  nn::Linear head_;
};

/// Stacks pose components into [B,3] and [B,4] tensors.
ad::Tensor positions_tensor(std::span<const Pose> poses);
ad::Tensor quaternions_tensor(std::span<const Pose> poses);

}  // namespace pae::models
