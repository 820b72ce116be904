#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/dataset.hpp"
#include "pae/gradcheck.hpp"
#include "pae/models.hpp"
#include "pae/optim.hpp"

namespace pae::train {

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-10;
  /// Step decay: multiply the rate by `lr_decay` every `lr_decay_every`
  /// epochs; 0 disables it.
  std::size_t lr_decay_every = 0;
  double lr_decay = 1.0;
  std::uint64_t seed = 0;

  double rate_at(std::size_t epoch) const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Receives one JSON record per epoch.
using LogSink = std::function<void(const nlohmann::json&)>;

template <typename Model>
struct Trained {
  Model model;
  ad::OptimState optim;
  std::uint64_t epochs = 0;
  nlohmann::json summary = nlohmann::json::object();
};

/// Minimizes the learnable pose loss over the train split with Adam.
Trained<models::AprModel> train_apr(const sim::Dataset& dataset, const models::AprConfig& config,
                                    const TrainConfig& train, const LogSink& log = {});

/// Distills a PAE from a frozen teacher: latent matching on both branches
/// plus the pose loss of the student latents decoded by the teacher heads,
/// with the teacher's loss weights held fixed.
Trained<models::PaeModel> train_pae(const models::AprModel& teacher, const sim::Dataset& dataset,
                                    const models::PaeConfig& config, const TrainConfig& train,
                                    const LogSink& log = {});

/// Mean absolute error between renders and decode(encode(pose)) with the
/// PAE frozen. The summary records the untrained held-out baseline.
Trained<models::DecoderModel> train_decoder(const models::PaeModel& pae, const sim::Dataset& dataset,
                                            const models::DecoderConfig& config, const TrainConfig& train,
                                            const LogSink& log = {});

/// Siamese relative translation regression on train pairs.
Trained<models::RprModel> train_rpr(const sim::Dataset& dataset, const models::RprConfig& config,
                                    const TrainConfig& train, const LogSink& log = {});

/// Index pairs (a, b) with target x_b - x_a.
struct PairSet {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;
  std::size_t size() const { return a.size(); }
};

/// One pair per train sample: even positions in a shuffled anchor order are
/// paired with their nearest same-scene neighbour, odd ones with a random
/// same-scene sample. Pair order is randomized. Needs at least two samples.
PairSet make_rpr_pairs(const sim::Split& split, std::uint64_t seed);

/// Mean ||rpr(a, b) - (x_b - x_a)|| over `pairs`.
double rpr_pair_loss(const models::RprModel& rpr, const sim::Split& split, const PairSet& pairs);

/// Largest absolute train position coordinate; PAE positions are divided
/// by it before encoding.
double position_scale(const sim::Split& split);

/// Model-init seed for a named model kind.
std::uint64_t init_seed(std::uint64_t seed, std::uint64_t model_tag);

struct ModelGradCheck {
  std::string model;
  ad::GradCheckResult result;
};

/// Gradient check of every trainable model at its initialization on random
/// batches of two: the teacher and both students (single- and three-scene)
/// through their training losses, the relative regressor through its pair
/// loss, and the decoder through a fixed random linear functional of its
/// output, which keeps the L1 kink out of the finite-difference step.
std::vector<ModelGradCheck> init_grad_checks(std::uint64_t seed, std::size_t resolution, std::size_t latent_dim,
                                             const ad::GradCheckOptions& options);

}  // namespace pae::train
