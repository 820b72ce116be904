#include "pae/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pae/error.hpp"
#include "pae/losses.hpp"
#include "pae/rng.hpp"

namespace pae::train {

using nlohmann::json;
using namespace pae::models;

double TrainConfig::rate_at(std::size_t epoch) const {
  if (lr_decay_every == 0) return learning_rate;
  return learning_rate * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
}

json TrainConfig::to_json() const {
  return json{{"epochs", epochs},
              {"batch_size", batch_size},
              {"learning_rate", learning_rate},
              {"beta1", beta1},
              {"beta2", beta2},
              {"epsilon", epsilon},
              {"lr_decay_every", lr_decay_every},
              {"lr_decay", lr_decay},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.lr_decay_every = j.at("lr_decay_every").get<std::size_t>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::uint64_t init_seed(std::uint64_t seed, std::uint64_t model_tag) {
  return derive_seed(seed, stream::kInit, model_tag);
}

double position_scale(const sim::Split& split) {
  double scale = 0.0;
  for (const Pose& p : split.poses) {
    for (double v : p.x) scale = std::max(scale, std::abs(v));
  }
  if (!(scale > 0.0)) throw ValidationError("position scale of an empty or degenerate split");
  return scale;
}

namespace {

enum ModelTag : std::uint64_t { kTagApr = 1, kTagPae = 2, kTagDecoder = 3, kTagRpr = 4 };

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, stream::kShuffle, epoch));
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

ad::Tensor gather_images(const sim::Split& split, std::span<const std::size_t> idx) {
  const std::size_t n = split.image_size();
  ad::Tensor t({idx.size(), n});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto img = split.image(idx[r]);
    for (std::size_t c = 0; c < n; ++c) t[r * n + c] = static_cast<double>(img[c]);
  }
  return t;
}

ad::Tensor gather_rows(const ad::Tensor& src, std::span<const std::size_t> idx) {
  const std::size_t c = src.cols();
  ad::Tensor t({idx.size(), c});
  for (std::size_t r = 0; r < idx.size(); ++r) std::copy_n(src.ptr() + idx[r] * c, c, t.ptr() + r * c);
  return t;
}

std::vector<Pose> gather_poses(const sim::Split& split, std::span<const std::size_t> idx) {
  std::vector<Pose> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(split.poses[i]);
  return out;
}

std::vector<int> gather_scenes(const sim::Split& split, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(split.scene_ids[i]);
  return out;
}

ad::OptimState make_adam(const TrainConfig& t) {
  return ad::OptimState::adam(t.learning_rate, t.beta1, t.beta2, t.epsilon);
}

/// Runs `body(epoch, batch_indices)` for every mini-batch of every epoch, returning
/// the batch loss; handles rate scheduling, logging and divergence reporting.
template <typename Body, typename Extra>
void run_epochs(const char* name, std::size_t n, const TrainConfig& train, ad::OptimState& optim, const LogSink& log,
                Body&& body, Extra&& extra) {
  if (train.batch_size == 0) throw ValidationError("batch size must be positive");
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    optim.learning_rate = train.rate_at(epoch);
    const auto order = epoch_order(n, train.seed, epoch);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += train.batch_size) {
      const std::size_t end = std::min(n, start + train.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      double loss = 0.0;
      try {
        loss = body(epoch, idx);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(name) + " diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches) + ": " + e.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericalError(std::string(name) + " diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batches) + ": non-finite loss");
      }
      total += loss;
      ++batches;
    }
    json rec{{"model", name}, {"epoch", epoch + 1}, {"loss", total / static_cast<double>(batches)},
             {"learning_rate", optim.learning_rate}};
    extra(rec);
    if (log) log(rec);
  }
}

}  // namespace

Trained<AprModel> train_apr(const sim::Dataset& dataset, const AprConfig& config, const TrainConfig& train,
                            const LogSink& log) {
  const sim::Split& split = dataset.train;
  if (split.size() == 0) throw ValidationError("train_apr: empty train split");
  if (config.resolution != split.resolution) {
    throw ValidationError("train_apr: model resolution " + std::to_string(config.resolution) +
                          " differs from dataset resolution " + std::to_string(split.resolution));
  }
  Trained<AprModel> out{AprModel(config, init_seed(train.seed, kTagApr)), make_adam(train)};
  AprModel& model = out.model;
  const ad::Tensor all_x = positions_tensor(split.poses);
  const ad::Tensor all_q = quaternions_tensor(split.poses);

  double last_position = 0.0, last_orientation = 0.0;
  double sum_position = 0.0, sum_orientation = 0.0;
  std::size_t count = 0;
  run_epochs(
      "apr", split.size(), train, out.optim, log,
      [&](std::size_t, std::span<const std::size_t> idx) {
        ad::Graph g;
        const auto nodes = model.build(g, g.constant(gather_images(split, idx)));
        const auto loss = graph_loss::pose_loss(g, nodes.x, nodes.q_raw, g.constant(gather_rows(all_x, idx)),
                                                g.constant(gather_rows(all_q, idx)), model.s_x(g), model.s_q(g));
        const ad::Gradients grads = g.backward(loss.total);
        ad::step(out.optim, model.params(), grads);
        sum_position += g.value(loss.position).item() * static_cast<double>(idx.size());
        sum_orientation += g.value(loss.orientation).item() * static_cast<double>(idx.size());
        count += idx.size();
        return g.value(loss.total).item();
      },
      [&](json& rec) {
        last_position = sum_position / static_cast<double>(count);
        last_orientation = sum_orientation / static_cast<double>(count);
        const LossWeights w = model.loss_weights();
        rec["position_loss"] = last_position;
        rec["orientation_loss"] = last_orientation;
        rec["s_x"] = w.s_x;
        rec["s_q"] = w.s_q;
        sum_position = sum_orientation = 0.0;
        count = 0;
      });
  out.epochs = train.epochs;
  out.summary = json{{"final_position_loss", last_position}, {"final_orientation_loss", last_orientation}};
  return out;
}

namespace {

struct TeacherTargets {
  ad::Tensor z_x;
  ad::Tensor z_q;
};

TeacherTargets teacher_latents(const AprModel& teacher, const sim::Split& split) {
  const std::size_t d = teacher.config().latent_dim;
  TeacherTargets t{ad::Tensor({split.size(), d}), ad::Tensor({split.size(), d})};
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < split.size(); start += kChunk) {
    const std::size_t end = std::min(split.size(), start + kChunk);
    const auto n = split.image_size();
    const auto outputs = teacher.forward_batch(std::span<const float>(split.images).subspan(start * n, (end - start) * n));
    for (std::size_t i = start; i < end; ++i) {
      std::copy_n(outputs[i - start].latent.z_x.data(), d, t.z_x.ptr() + i * d);
      std::copy_n(outputs[i - start].latent.z_q.data(), d, t.z_q.ptr() + i * d);
    }
  }
  return t;
}

}  // namespace

Trained<PaeModel> train_pae(const AprModel& teacher, const sim::Dataset& dataset, const PaeConfig& config,
                            const TrainConfig& train, const LogSink& log) {
  const sim::Split& split = dataset.train;
  if (split.size() == 0) throw ValidationError("train_pae: empty train split");
  if (config.latent_dim != teacher.config().latent_dim) {
    throw ValidationError("train_pae: student latent dimension " + std::to_string(config.latent_dim) +
                          " differs from teacher's " + std::to_string(teacher.config().latent_dim));
  }
  if (teacher.config().resolution != split.resolution) {
    throw ValidationError("train_pae: teacher resolution does not match the dataset");
  }
  Trained<PaeModel> out{PaeModel(config, init_seed(train.seed, kTagPae)), make_adam(train)};
  PaeModel& student = out.model;
  const TeacherTargets targets = teacher_latents(teacher, split);
  // Output biases start at the mean teacher latent so every unit the teacher
  // uses begins active at the right scale.
  const std::string last = std::to_string(config.widths.size());
  for (const auto& [name, source] : {std::pair{"mlp_x", &targets.z_x}, std::pair{"mlp_q", &targets.z_q}}) {
    ad::Tensor& bias = student.params().get(std::string(name) + "." + last + ".bias").value;
    bias.fill(0.0);
    for (std::size_t r = 0; r < source->rows(); ++r) {
      for (std::size_t c = 0; c < bias.numel(); ++c) bias[c] += source->at(r, c) / static_cast<double>(source->rows());
    }
  }
  const ad::Tensor all_x = positions_tensor(split.poses);
  const ad::Tensor all_q = quaternions_tensor(split.poses);
  const LossWeights frozen = teacher.loss_weights();

  double sum_latent = 0.0, sum_position = 0.0, sum_orientation = 0.0;
  std::size_t count = 0;
  double first_latent = -1.0, last_latent = 0.0;
  run_epochs(
      "pae", split.size(), train, out.optim, log,
      [&](std::size_t, std::span<const std::size_t> idx) {
        ad::Graph g;
        const auto poses = gather_poses(split, idx);
        const auto scenes = gather_scenes(split, idx);
        const auto z = student.build(g, poses, scenes);
        const ad::NodeId match_x = graph_loss::mean_row_distance(g, g.constant(gather_rows(targets.z_x, idx)), z.z_x);
        const ad::NodeId match_q = graph_loss::mean_row_distance(g, g.constant(gather_rows(targets.z_q, idx)), z.z_q);
        const auto pose = graph_loss::pose_loss(g, teacher.regress_x(g, z.z_x), teacher.regress_q(g, z.z_q),
                                                g.constant(gather_rows(all_x, idx)),
                                                g.constant(gather_rows(all_q, idx)),
                                                g.constant(ad::Tensor::scalar(frozen.s_x)),
                                                g.constant(ad::Tensor::scalar(frozen.s_q)));
        const ad::NodeId total = g.add(g.add(match_x, match_q), pose.total);
        const ad::Gradients grads = g.backward(total);
        ad::step(out.optim, student.params(), grads);
        const double b = static_cast<double>(idx.size());
        sum_latent += (g.value(match_x).item() + g.value(match_q).item()) * b;
        sum_position += g.value(pose.position).item() * b;
        sum_orientation += g.value(pose.orientation).item() * b;
        count += idx.size();
        return g.value(total).item();
      },
      [&](json& rec) {
        const double c = static_cast<double>(count);
        last_latent = sum_latent / c;
        if (first_latent < 0.0) first_latent = last_latent;
        rec["latent_match"] = last_latent;
        rec["position_loss"] = sum_position / c;
        rec["orientation_loss"] = sum_orientation / c;
        sum_latent = sum_position = sum_orientation = 0.0;
        count = 0;
      });
  out.epochs = train.epochs;
  out.summary = json{{"first_epoch_latent_match", first_latent}, {"final_latent_match", last_latent}};
  return out;
}

namespace {

double decoder_l1(const DecoderModel& decoder, const ad::Tensor& z_x, const ad::Tensor& z_q,
                  const sim::Split& split) {
  double total = 0.0;
  constexpr std::size_t kChunk = 64;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < split.size(); start += kChunk) {
    const std::size_t end = std::min(split.size(), start + kChunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    ad::Graph g;
    const ad::NodeId pred = decoder.build(g, g.constant(gather_rows(z_x, idx)), g.constant(gather_rows(z_q, idx)));
    const ad::Tensor& p = g.value(pred);
    const ad::Tensor target = gather_images(split, idx);
    for (std::size_t i = 0; i < p.numel(); ++i) total += std::abs(std::clamp(p[i], 0.0, 1.0) - target[i]);
  }
  return total / static_cast<double>(split.size() * split.image_size());
}

std::pair<ad::Tensor, ad::Tensor> pae_latents(const PaeModel& pae, const sim::Split& split) {
  ad::Graph g;
  const auto z = pae.build(g, split.poses, split.scene_ids);
  return {g.value(z.z_x), g.value(z.z_q)};
}

}  // namespace

Trained<DecoderModel> train_decoder(const PaeModel& pae, const sim::Dataset& dataset, const DecoderConfig& config,
                                    const TrainConfig& train, const LogSink& log) {
  const sim::Split& split = dataset.train;
  if (split.size() == 0) throw ValidationError("train_decoder: empty train split");
  if (config.latent_dim != pae.config().latent_dim || config.resolution != split.resolution) {
    throw ValidationError("train_decoder: decoder dimensions do not match the PAE and dataset");
  }
  Trained<DecoderModel> out{DecoderModel(config, init_seed(train.seed, kTagDecoder)), make_adam(train)};
  DecoderModel& decoder = out.model;
  const auto [train_zx, train_zq] = pae_latents(pae, split);
  const auto [test_zx, test_zq] = pae_latents(pae, dataset.test);
  const double baseline = decoder_l1(decoder, test_zx, test_zq, dataset.test);

  run_epochs(
      "decoder", split.size(), train, out.optim, log,
      [&](std::size_t, std::span<const std::size_t> idx) {
        ad::Graph g;
        const ad::NodeId pred =
            decoder.build(g, g.constant(gather_rows(train_zx, idx)), g.constant(gather_rows(train_zq, idx)));
        const ad::NodeId loss = g.l1loss(pred, g.constant(gather_images(split, idx)));
        ad::step(out.optim, decoder.params(), g.backward(loss));
        return g.value(loss).item();
      },
      [](json&) {});
  out.epochs = train.epochs;
  out.summary = json{{"untrained_test_l1", baseline}, {"final_test_l1", decoder_l1(decoder, test_zx, test_zq, dataset.test)}};
  return out;
}

PairSet make_rpr_pairs(const sim::Split& split, std::uint64_t seed) {
  const std::size_t n = split.size();
  if (n < 2) throw ValidationError("train_rpr needs at least 2 train samples, got " + std::to_string(n));
  SplitMix64 rng(derive_seed(seed, stream::kPairs));
  std::vector<std::size_t> anchors(n);
  std::iota(anchors.begin(), anchors.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(anchors));

  PairSet pairs;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = anchors[k];
    std::size_t partner = i;
    if (k % 2 == 0) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || split.scene_ids[j] != split.scene_ids[i]) continue;
        const double dist = distance(split.poses[i].x, split.poses[j].x);
        if (dist < best) {
          best = dist;
          partner = j;
        }
      }
    } else {
      for (int attempt = 0; attempt < 64; ++attempt) {
        const std::size_t j = rng.below(n);
        if (j != i && split.scene_ids[j] == split.scene_ids[i]) {
          partner = j;
          break;
        }
      }
    }
    if (rng.uniform() < 0.5) {
      pairs.a.push_back(i);
      pairs.b.push_back(partner);
    } else {
      pairs.a.push_back(partner);
      pairs.b.push_back(i);
    }
  }
  return pairs;
}

namespace {

ad::Tensor pair_targets(const sim::Split& split, const PairSet& pairs, std::span<const std::size_t> idx) {
  ad::Tensor t({idx.size(), 3});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const Vec3 d = split.poses[pairs.b[idx[r]]].x - split.poses[pairs.a[idx[r]]].x;
    for (std::size_t k = 0; k < 3; ++k) t.at(r, k) = d[k];
  }
  return t;
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& from, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(from[i]);
  return out;
}

}  // namespace

double rpr_pair_loss(const RprModel& rpr, const sim::Split& split, const PairSet& pairs) {
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  ad::Graph g;
  const ad::NodeId pred = rpr.build(g, g.constant(gather_images(split, pick(pairs.a, idx))),
                                    g.constant(gather_images(split, pick(pairs.b, idx))));
  const ad::NodeId loss = graph_loss::mean_row_distance(g, pred, g.constant(pair_targets(split, pairs, idx)));
  return g.value(loss).item();
}

Trained<RprModel> train_rpr(const sim::Dataset& dataset, const RprConfig& config, const TrainConfig& train,
                            const LogSink& log) {
  const sim::Split& split = dataset.train;
  if (split.size() < 2) {
    throw ValidationError("train_rpr needs at least 2 train samples, got " + std::to_string(split.size()));
  }
  Trained<RprModel> out{RprModel(config, init_seed(train.seed, kTagRpr)), make_adam(train)};
  RprModel& rpr = out.model;
  PairSet pairs;
  std::size_t pairs_epoch = std::numeric_limits<std::size_t>::max();
  run_epochs(
      "rpr", split.size(), train, out.optim, log,
      [&](std::size_t epoch, std::span<const std::size_t> idx) {
        if (epoch != pairs_epoch) {
          pairs = make_rpr_pairs(split, derive_seed(train.seed, stream::kPairs, epoch));
          pairs_epoch = epoch;
        }
        ad::Graph g;
        const ad::NodeId pred = rpr.build(g, g.constant(gather_images(split, pick(pairs.a, idx))),
                                          g.constant(gather_images(split, pick(pairs.b, idx))));
        const ad::NodeId loss = graph_loss::mean_row_distance(g, pred, g.constant(pair_targets(split, pairs, idx)));
        ad::step(out.optim, rpr.params(), g.backward(loss));
        return g.value(loss).item();
      },
      [](json&) {});
  out.epochs = train.epochs;
  return out;
}

namespace {

ad::Tensor random_rows(std::size_t rows, std::size_t cols, SplitMix64& rng, double lo, double hi) {
  ad::Tensor t({rows, cols});
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

ad::Tensor normal_rows(std::size_t rows, std::size_t cols, SplitMix64& rng, double scale) {
  ad::Tensor t({rows, cols});
  for (double& v : t.data()) v = rng.normal(0.0, scale);
  return t;
}

std::vector<Pose> random_poses(std::size_t n, SplitMix64& rng) {
  std::vector<Pose> poses;
  for (std::size_t i = 0; i < n; ++i) {
    poses.push_back(Pose::make({rng.normal(), rng.normal(), rng.normal()},
                               Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}));
  }
  return poses;
}

}  // namespace

std::vector<ModelGradCheck> init_grad_checks(std::uint64_t seed, std::size_t resolution, std::size_t latent_dim,
                                             const ad::GradCheckOptions& options) {
  constexpr std::size_t kBatch = 2;
  const std::size_t pixels = resolution * resolution * 3;
  auto inputs = [seed](std::uint64_t attempt) { return SplitMix64(derive_seed(seed, stream::kGradCheck, attempt)); };
  std::vector<ModelGradCheck> out;

  AprConfig apr_cfg;
  apr_cfg.resolution = resolution;
  apr_cfg.latent_dim = latent_dim;
  AprModel apr(apr_cfg, init_seed(seed, kTagApr));
  out.push_back({"apr", ad::grad_check_resampling(apr.params(), [&](std::uint64_t attempt) -> ad::LossBuilder {
                   SplitMix64 rng = inputs(attempt);
                   const ad::Tensor images = random_rows(kBatch, pixels, rng, 0.0, 1.0);
                   const auto poses = random_poses(kBatch, rng);
                   return [&apr, images, poses](ad::Graph& g) {
                     const auto n = apr.build(g, g.constant(images));
                     return graph_loss::pose_loss(g, n.x, n.q_raw, g.constant(positions_tensor(poses)),
                                                  g.constant(quaternions_tensor(poses)), apr.s_x(g), apr.s_q(g))
                         .total;
                   };
                 }, options)});

  for (const std::size_t scenes : {std::size_t{1}, std::size_t{3}}) {
    PaeConfig pae_cfg;
    pae_cfg.latent_dim = latent_dim;
    pae_cfg.n_scenes = scenes;
    PaeModel pae(pae_cfg, init_seed(seed, kTagPae));
    const LossWeights frozen = apr.loss_weights();
    out.push_back({scenes == 1 ? "pae" : "pae-multi",
                   ad::grad_check_resampling(pae.params(), [&](std::uint64_t attempt) -> ad::LossBuilder {
                     SplitMix64 rng = inputs(attempt);
                     const auto poses = random_poses(kBatch, rng);
                     std::vector<int> ids;
                     for (std::size_t i = 0; i < kBatch; ++i) ids.push_back(static_cast<int>(rng.below(scenes)));
                     const ad::Tensor zx = normal_rows(kBatch, latent_dim, rng, 1.0);
                     const ad::Tensor zq = normal_rows(kBatch, latent_dim, rng, 1.0);
                     return [&pae, &apr, frozen, poses, ids, zx, zq](ad::Graph& g) {
                       const auto z = pae.build(g, poses, ids);
                       const ad::NodeId match = g.add(graph_loss::mean_row_distance(g, g.constant(zx), z.z_x),
                                                      graph_loss::mean_row_distance(g, g.constant(zq), z.z_q));
                       const auto pose = graph_loss::pose_loss(
                           g, apr.regress_x(g, z.z_x), apr.regress_q(g, z.z_q), g.constant(positions_tensor(poses)),
                           g.constant(quaternions_tensor(poses)), g.constant(ad::Tensor::scalar(frozen.s_x)),
                           g.constant(ad::Tensor::scalar(frozen.s_q)));
                       return g.add(match, pose.total);
                     };
                   }, options)});
  }

  DecoderConfig dec_cfg;
  dec_cfg.latent_dim = latent_dim;
  dec_cfg.resolution = resolution;
  DecoderModel decoder(dec_cfg, init_seed(seed, kTagDecoder));
  out.push_back({"decoder", ad::grad_check_resampling(decoder.params(), [&](std::uint64_t attempt) -> ad::LossBuilder {
                   SplitMix64 rng = inputs(attempt);
                   const ad::Tensor zx = normal_rows(kBatch, latent_dim, rng, 1.0);
                   const ad::Tensor zq = normal_rows(kBatch, latent_dim, rng, 1.0);
                   const ad::Tensor probe = normal_rows(kBatch, pixels, rng, 1.0 / static_cast<double>(pixels));
                   return [&decoder, zx, zq, probe](ad::Graph& g) {
                     return g.sum(g.mul(decoder.build(g, g.constant(zx), g.constant(zq)), g.constant(probe)));
                   };
                 }, options)});

  RprConfig rpr_cfg;
  rpr_cfg.resolution = resolution;
  rpr_cfg.latent_dim = latent_dim;
  RprModel rpr(rpr_cfg, init_seed(seed, kTagRpr));
  out.push_back({"rpr", ad::grad_check_resampling(rpr.params(), [&](std::uint64_t attempt) -> ad::LossBuilder {
                   SplitMix64 rng = inputs(attempt);
                   const ad::Tensor a = random_rows(kBatch, pixels, rng, 0.0, 1.0);
                   const ad::Tensor b = random_rows(kBatch, pixels, rng, 0.0, 1.0);
                   const ad::Tensor target = normal_rows(kBatch, 3, rng, 5.0);
                   return [&rpr, a, b, target](ad::Graph& g) {
                     return graph_loss::mean_row_distance(g, rpr.build(g, g.constant(a), g.constant(b)),
                                                          g.constant(target));
                   };
                 }, options)});
  return out;
}

}  // namespace pae::train
