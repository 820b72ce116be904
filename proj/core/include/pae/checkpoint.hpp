#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pae/optim.hpp"

namespace pae {

/// Serialized model: parameters, optimizer state and provenance.
///
/// File layout: one line of compact JSON (the header), then a blob of
/// little-endian float64 values: every parameter in header order, followed by
/// the optimizer's first and then second moments when present.
struct Checkpoint {
  std::string kind;
  nlohmann::json model_config = nlohmann::json::object();
  std::string config_digest;
  std::string dataset_digest;
  /// Digest of the checkpoint this one was trained against (teacher, PAE).
  std::string parent_digest;
  std::uint64_t epoch = 0;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;
  ad::OptimState optim;
  nlohmann::json extra = nlohmann::json::object();

  /// Copies the current values of `params`.
  void capture(const ad::ParameterList& params);
  /// Overwrites `params` by name; every name and shape must match.
  void restore(ad::ParameterList& params) const;
  /// Digest of the serialized bytes.
  std::string digest() const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source = "<memory>");
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds a model of type `Model` from a checkpoint of matching kind.
template <typename Model, typename Config>
Model model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace pae

#include "pae/error.hpp"

namespace pae {

template <typename Model, typename Config>
Model model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != Model::kKind) {
    throw ValidationError("checkpoint holds a '" + ckpt.kind + "' model, expected '" + Model::kKind + "'");
  }
  Model model(Config::from_json(ckpt.model_config));
  ckpt.restore(model.params());
  return model;
}

}  // namespace pae
