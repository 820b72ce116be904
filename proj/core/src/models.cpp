#include "pae/models.hpp"

#include <algorithm>

#include "pae/error.hpp"

namespace pae::models {

using nlohmann::json;

namespace {

void check_latent(const LatentPair& latent, std::size_t d) {
  if (latent.z_x.size() != d || latent.z_q.size() != d) {
    throw ValidationError("latent dimension " + std::to_string(latent.z_x.size()) + "/" +
                          std::to_string(latent.z_q.size()) + " does not match model dimension " + std::to_string(d));
  }
}

std::vector<double> row(const ad::Tensor& t, std::size_t r) {
  const std::size_t c = t.cols();
  return std::vector<double>(t.ptr() + r * c, t.ptr() + (r + 1) * c);
}

}  // namespace

ad::Tensor positions_tensor(std::span<const Pose> poses) {
  ad::Tensor t({poses.size(), 3});
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) t.at(i, k) = poses[i].x[k];
  }
  return t;
}

ad::Tensor quaternions_tensor(std::span<const Pose> poses) {
  ad::Tensor t({poses.size(), 4});
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto q = poses[i].q.to_array();
    for (std::size_t k = 0; k < 4; ++k) t.at(i, k) = q[k];
  }
  return t;
}

// --- AprModel --------------------------------------------------------------

json AprConfig::to_json() const {
  return json{{"resolution", resolution},
              {"latent_dim", latent_dim},
              {"trunk_width", trunk_width},
              {"branch_init_gain", branch_init_gain},
              {"s_x_init", initial_weights.s_x},
              {"s_q_init", initial_weights.s_q}};
}

AprConfig AprConfig::from_json(const json& j) {
  AprConfig c;
  c.resolution = j.at("resolution").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.trunk_width = j.at("trunk_width").get<std::size_t>();
  c.branch_init_gain = j.at("branch_init_gain").get<double>();
  if (!(c.branch_init_gain > 0.0)) throw ValidationError("branch_init_gain must be positive");
  c.initial_weights = {j.at("s_x_init").get<double>(), j.at("s_q_init").get<double>()};
  return c;
}

AprModel::AprModel(const AprConfig& config, std::uint64_t seed) : config_(config) {
  if (config.latent_dim == 0 || config.resolution < 16) throw ValidationError("invalid APR configuration");
  SplitMix64 rng(seed);
  const std::size_t w = config.trunk_width;
  const std::size_t d = config.latent_dim;
  trunk_ = nn::Mlp(params_, "trunk", {input_size(), w, w}, true, rng);
  branch_x_ = nn::Mlp(params_, "branch_x", {w, d}, true, rng, config.branch_init_gain);
  branch_q_ = nn::Mlp(params_, "branch_q", {w, d}, true, rng, config.branch_init_gain);
  head_x_ = nn::Linear::create(params_, "head_x", d, 3, false, rng);
  head_q_ = nn::Linear::create(params_, "head_q", d, 4, false, rng);
  // Start the orientation head near the identity so normalization is well defined.
  params_[head_q_.bias].value[0] = 1.0;
  s_x_ = params_.add("loss.s_x", ad::Tensor::scalar(config.initial_weights.s_x));
  s_q_ = params_.add("loss.s_q", ad::Tensor::scalar(config.initial_weights.s_q));
}

AprModel::Nodes AprModel::build(ad::Graph& g, ad::NodeId images) const {
  const std::size_t cols = g.value(images).cols();
  if (cols != input_size()) {
    throw ValidationError("APR expects images of " + std::to_string(input_size()) + " values (resolution " +
                          std::to_string(config_.resolution) + "), got " + std::to_string(cols));
  }
  const ad::NodeId features = trunk_.apply(g, params_, images);
  Nodes n;
  n.z_x = branch_x_.apply(g, params_, features);
  n.z_q = branch_q_.apply(g, params_, features);
  n.x = regress_x(g, n.z_x);
  n.q_raw = regress_q(g, n.z_q);
  return n;
}

ad::NodeId AprModel::regress_x(ad::Graph& g, ad::NodeId z_x) const { return head_x_.apply(g, params_, z_x); }
ad::NodeId AprModel::regress_q(ad::Graph& g, ad::NodeId z_q) const { return head_q_.apply(g, params_, z_q); }
ad::NodeId AprModel::s_x(ad::Graph& g) const { return g.parameter(params_[s_x_].value); }
ad::NodeId AprModel::s_q(ad::Graph& g) const { return g.parameter(params_[s_q_].value); }

LossWeights AprModel::loss_weights() const { return {params_[s_x_].value.item(), params_[s_q_].value.item()}; }

std::vector<AprModel::Output> AprModel::forward_batch(std::span<const float> images) const {
  const std::size_t n = input_size();
  if (images.empty() || images.size() % n != 0) {
    throw ValidationError("APR expects a multiple of " + std::to_string(n) + " image values (resolution " +
                          std::to_string(config_.resolution) + "), got " + std::to_string(images.size()));
  }
  const std::size_t batch = images.size() / n;
  ad::Graph g;
  const Nodes nodes = build(g, g.constant(nn::tensor_from_floats(images, batch, n)));
  std::vector<Output> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    out[i].latent = LatentPair{row(g.value(nodes.z_x), i), row(g.value(nodes.z_q), i)};
    const auto x = row(g.value(nodes.x), i);
    out[i].raw_q = Quaternion::from_array(row(g.value(nodes.q_raw), i));
    out[i].pose = Pose::make({x[0], x[1], x[2]}, out[i].raw_q);
  }
  return out;
}

AprModel::Output AprModel::forward(std::span<const float> image) const {
  if (image.size() != input_size()) {
    throw ValidationError("image has " + std::to_string(image.size()) + " values, APR trained at resolution " +
                          std::to_string(config_.resolution));
  }
  return forward_batch(image).front();
}

Pose AprModel::decode(const LatentPair& latent) const {
  check_latent(latent, config_.latent_dim);
  ad::Graph g;
  const std::size_t d = config_.latent_dim;
  const ad::NodeId x = regress_x(g, g.constant(ad::Tensor({1, d}, latent.z_x)));
  const ad::NodeId q = regress_q(g, g.constant(ad::Tensor({1, d}, latent.z_q)));
  const auto& xv = g.value(x);
  return Pose::make({xv[0], xv[1], xv[2]}, Quaternion::from_array(g.value(q).data()));
}

// --- PaeModel --------------------------------------------------------------

json PaeConfig::to_json() const {
  return json{{"latent_dim", latent_dim},
              {"fourier_levels", fourier_levels},
              {"widths", widths},
              {"n_scenes", n_scenes},
              {"position_scale", position_scale}};
}

PaeConfig PaeConfig::from_json(const json& j) {
  PaeConfig c;
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.fourier_levels = j.at("fourier_levels").get<std::size_t>();
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  c.n_scenes = j.at("n_scenes").get<std::size_t>();
  c.position_scale = j.at("position_scale").get<double>();
  return c;
}

PaeModel::PaeModel(const PaeConfig& config, std::uint64_t seed) : config_(config) {
  if (config.latent_dim == 0) throw ValidationError("PAE latent dimension must be positive");
  if (!(config.position_scale > 0.0)) throw ValidationError("PAE position scale must be positive");
  fourier_ = FourierSpec{config.fourier_levels, true};
  SplitMix64 rng(seed);
  std::vector<std::size_t> wx{position_input_dim()};
  std::vector<std::size_t> wq{orientation_input_dim()};
  for (auto w : config.widths) {
    wx.push_back(w);
    wq.push_back(w);
  }
  wx.push_back(config.latent_dim);
  wq.push_back(config.latent_dim);
  mlp_x_ = nn::Mlp(params_, "mlp_x", wx, true, rng);
  mlp_q_ = nn::Mlp(params_, "mlp_q", wq, true, rng);
}

std::size_t PaeModel::position_input_dim() const {
  return fourier_.encoded_length(3) + (config_.multi_scene() ? fourier_.encoded_length(1) : 0);
}

std::size_t PaeModel::orientation_input_dim() const {
  return fourier_.encoded_length(4) + (config_.multi_scene() ? fourier_.encoded_length(1) : 0);
}

void PaeModel::check_scene(int scene_id) const {
  if (!config_.multi_scene()) return;
  if (scene_id < 0 || static_cast<std::size_t>(scene_id) >= config_.n_scenes) {
    throw ValidationError("scene " + std::to_string(scene_id) + " unknown to a PAE trained on " +
                          std::to_string(config_.n_scenes) + " scenes");
  }
}

void PaeModel::append_scene_code(int scene_id, std::vector<double>& out) const {
  if (!config_.multi_scene()) return;
  const double s = static_cast<double>(scene_id) / static_cast<double>(config_.n_scenes);
  fourier_encode_into(std::span<const double>(&s, 1), fourier_, out);
}

ad::Tensor PaeModel::position_inputs(std::span<const Pose> poses, std::span<const int> scene_ids) const {
  const std::size_t n = position_input_dim();
  std::vector<double> data;
  data.reserve(poses.size() * n);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const int sid = scene_ids.empty() ? 0 : scene_ids[i];
    check_scene(sid);
    const Vec3 scaled = (1.0 / config_.position_scale) * poses[i].x;
    fourier_encode_into(scaled, fourier_, data);
    append_scene_code(sid, data);
  }
  return ad::Tensor({poses.size(), n}, std::move(data));
}

ad::Tensor PaeModel::orientation_inputs(std::span<const Pose> poses, std::span<const int> scene_ids) const {
  const std::size_t n = orientation_input_dim();
  std::vector<double> data;
  data.reserve(poses.size() * n);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const int sid = scene_ids.empty() ? 0 : scene_ids[i];
    check_scene(sid);
    fourier_encode_into(poses[i].q.to_array(), fourier_, data);
    append_scene_code(sid, data);
  }
  return ad::Tensor({poses.size(), n}, std::move(data));
}

PaeModel::Nodes PaeModel::build(ad::Graph& g, std::span<const Pose> poses, std::span<const int> scene_ids) const {
  if (poses.empty()) throw ValidationError("PAE needs at least one pose");
  if (!scene_ids.empty() && scene_ids.size() != poses.size()) {
    throw ValidationError("PAE got " + std::to_string(poses.size()) + " poses but " +
                          std::to_string(scene_ids.size()) + " scene ids");
  }
  Nodes n;
  n.z_x = mlp_x_.apply(g, params_, g.constant(position_inputs(poses, scene_ids)));
  n.z_q = mlp_q_.apply(g, params_, g.constant(orientation_inputs(poses, scene_ids)));
  return n;
}

std::vector<LatentPair> PaeModel::forward_batch(std::span<const Pose> poses, std::span<const int> scene_ids) const {
  ad::Graph g;
  const Nodes nodes = build(g, poses, scene_ids);
  std::vector<LatentPair> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out[i] = LatentPair{row(g.value(nodes.z_x), i), row(g.value(nodes.z_q), i)};
  }
  return out;
}

LatentPair PaeModel::forward(const Pose& pose, int scene_id) const {
  if (!pose.valid()) throw ValidationError("PAE input pose is not a valid unit-quaternion pose");
  const int sid = scene_id;
  return forward_batch(std::span<const Pose>(&pose, 1), std::span<const int>(&sid, 1)).front();
}

// --- DecoderModel ----------------------------------------------------------

json DecoderConfig::to_json() const {
  return json{{"latent_dim", latent_dim},
              {"resolution", resolution},
              {"widths", widths},
              {"combine", combine == LatentCombine::kSum ? "sum" : "concat"}};
}

DecoderConfig DecoderConfig::from_json(const json& j) {
  DecoderConfig c;
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.resolution = j.at("resolution").get<std::size_t>();
  c.widths = j.at("widths").get<std::vector<std::size_t>>();
  const auto mode = j.at("combine").get<std::string>();
  if (mode == "sum") {
    c.combine = LatentCombine::kSum;
  } else if (mode == "concat") {
    c.combine = LatentCombine::kConcat;
  } else {
    throw ValidationError("decoder combine must be 'sum' or 'concat', got '" + mode + "'");
  }
  return c;
}

DecoderModel::DecoderModel(const DecoderConfig& config, std::uint64_t seed) : config_(config) {
  SplitMix64 rng(seed);
  const std::size_t in = config.combine == LatentCombine::kSum ? config.latent_dim : 2 * config.latent_dim;
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), config.widths.begin(), config.widths.end());
  widths.push_back(3 * config.resolution * config.resolution);
  mlp_ = nn::Mlp(params_, "mlp", widths, false, rng);
}

ad::NodeId DecoderModel::combine(ad::Graph& g, ad::NodeId z_x, ad::NodeId z_q) const {
  return config_.combine == LatentCombine::kSum ? g.add(z_x, z_q) : g.concat(z_x, z_q);
}

ad::NodeId DecoderModel::build(ad::Graph& g, ad::NodeId z_x, ad::NodeId z_q) const {
  return mlp_.apply(g, params_, combine(g, z_x, z_q));
}

sim::Image DecoderModel::decode(const LatentPair& latent) const {
  check_latent(latent, config_.latent_dim);
  ad::Graph g;
  const std::size_t d = config_.latent_dim;
  const ad::NodeId out =
      build(g, g.constant(ad::Tensor({1, d}, latent.z_x)), g.constant(ad::Tensor({1, d}, latent.z_q)));
  sim::Image img;
  img.resolution = config_.resolution;
  img.pixels.reserve(g.value(out).numel());
  for (double v : g.value(out).data()) img.pixels.push_back(static_cast<float>(std::clamp(v, 0.0, 1.0)));
  return img;
}

// --- RprModel --------------------------------------------------------------

json RprConfig::to_json() const {
  return json{{"resolution", resolution}, {"latent_dim", latent_dim}, {"trunk_width", trunk_width}};
}

RprConfig RprConfig::from_json(const json& j) {
  RprConfig c;
  c.resolution = j.at("resolution").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.trunk_width = j.at("trunk_width").get<std::size_t>();
  return c;
}

RprModel::RprModel(const RprConfig& config, std::uint64_t seed) : config_(config) {
  SplitMix64 rng(seed);
  const std::size_t w = config.trunk_width;
  const std::size_t d = config.latent_dim;
  trunk_ = nn::Mlp(params_, "trunk", {input_size(), w, w}, true, rng);
  fuse_ = nn::Mlp(params_, "fuse", {2 * w, d, d}, true, rng);
  head_ = nn::Linear::create(params_, "head", d, 3, false, rng);
}

ad::NodeId RprModel::build(ad::Graph& g, ad::NodeId images_a, ad::NodeId images_b) const {
  for (ad::NodeId img : {images_a, images_b}) {
    if (g.value(img).cols() != input_size()) {
      throw ValidationError("RPR expects images of " + std::to_string(input_size()) + " values, got " +
                            std::to_string(g.value(img).cols()));
    }
  }
  const ad::NodeId fa = trunk_.apply(g, params_, images_a);
  const ad::NodeId fb = trunk_.apply(g, params_, images_b);
  return head_.apply(g, params_, fuse_.apply(g, params_, g.concat(fa, fb)));
}

Vec3 RprModel::predict(std::span<const float> image_a, std::span<const float> image_b) const {
  ad::Graph g;
  const std::size_t n = input_size();
  const ad::NodeId out = build(g, g.constant(nn::tensor_from_floats(image_a, 1, n)),
                               g.constant(nn::tensor_from_floats(image_b, 1, n)));
  const auto& v = g.value(out);
  return {v[0], v[1], v[2]};
}

}  // namespace pae::models
