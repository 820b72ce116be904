#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "pae/checkpoint.hpp"
#include "pae/config.hpp"
#include "pae/dataset.hpp"
#include "pae/models.hpp"
#include "pae/report.hpp"

namespace pae::experiments {

/// Shared state of one command invocation. Artifacts live under
/// `config.run_dir()`.
struct Context {
  config::RunConfig config;
  /// Accept artifacts whose recorded digests differ from the current config.
  bool force = false;
  std::function<void(const std::string&)> progress;

  void note(const std::string& message) const;
};

/// Names of the trainable models, in pipeline order.
inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"apr", "pae", "decoder", "rpr"};
  return names;
}

report::Report gen_scene(const Context& ctx);
/// `model` is one of apr, pae, decoder, rpr.
report::Report train(const Context& ctx, std::string_view model);
report::Report evaluate(const Context& ctx);
report::Report refine(const Context& ctx);
report::Report refine_random_guess(const Context& ctx);
report::Report virtual_rpr(const Context& ctx);
report::Report ablate_fourier(const Context& ctx);
report::Report orientation_affine(const Context& ctx);
/// Collects every per-command report of the run into report.json/report.txt.
report::Report summarize(const Context& ctx);

/// Loads the run's dataset, refusing one generated from other settings.
sim::Dataset load_run_dataset(const Context& ctx);

struct LoadedApr {
  models::AprModel model;
  Checkpoint checkpoint;
};
struct LoadedPae {
  models::PaeModel model;
  Checkpoint checkpoint;
};
struct LoadedDecoder {
  models::DecoderModel model;
  Checkpoint checkpoint;
};
struct LoadedRpr {
  models::RprModel model;
  Checkpoint checkpoint;
};
LoadedApr load_apr(const Context& ctx, const sim::Dataset& dataset);
LoadedPae load_pae(const Context& ctx, const sim::Dataset& dataset, const Checkpoint& teacher);
LoadedDecoder load_decoder(const Context& ctx, const sim::Dataset& dataset, const Checkpoint& pae);
LoadedRpr load_rpr(const Context& ctx, const sim::Dataset& dataset);

}  // namespace pae::experiments
