#include "pae/config.hpp"

#include <cmath>

#include "binio.hpp"
#include "pae/digest.hpp"
#include "pae/error.hpp"

namespace pae::config {

using nlohmann::json;

namespace {

json train_defaults(double lr, std::size_t epochs) {
  return json{{"epochs", epochs},          {"batch_size", 32},     {"learning_rate", lr},
              {"beta1", 0.9},              {"beta2", 0.999},       {"epsilon", 1e-10},
              {"lr_decay_every", epochs / 3}, {"lr_decay", 0.3}};
}

const json& section(const json& values, std::string_view key) {
  const auto it = values.find(std::string(key));
  if (it == values.end()) throw ValidationError("config has no section '" + std::string(key) + "'");
  return *it;
}

std::string kind_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_float()) return "real";
  if (v.is_number()) return "integer";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "object";
  return "null";
}

/// `incoming` converted to the type of `current`, or throws.
json coerce(const json& current, const json& incoming, const std::string& path) {
  if (current.is_number_float() && incoming.is_number()) return json(incoming.get<double>());
  if (current.is_number_integer() && incoming.is_number_integer()) {
    if (current.is_number_unsigned() && incoming.get<std::int64_t>() < 0) {
      throw ValidationError("config key '" + path + "' must be non-negative");
    }
    return incoming;
  }
  if (current.is_number_integer() && incoming.is_number_float()) {
    const double v = incoming.get<double>();
    if (v == std::floor(v) && v >= 0.0) return json(static_cast<std::uint64_t>(v));
  }
  if (current.is_array() && incoming.is_array()) return incoming;
  if (current.type() == incoming.type()) return incoming;
  throw ValidationError("config key '" + path + "' expects " + kind_name(current) + ", got " + kind_name(incoming));
}

}  // namespace

void merge_strict(json& base, const json& overrides, const std::string& path) {
  if (!overrides.is_object()) throw ValidationError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : overrides.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    const auto it = base.find(key);
    if (it == base.end()) throw ValidationError("unknown config key '" + full + "'");
    if (it->is_object()) {
      merge_strict(*it, value, full);
    } else {
      *it = coerce(*it, value, full);
    }
  }
}

json RunConfig::defaults() {
  sim::DatasetConfig dataset;
  json ds = dataset.to_json();
  ds.erase("seed");
  return json{{"name", "default"},
              {"output_dir", "runs"},
              {"seed", 0},
              {"latent_dim", 64},
              {"dataset", ds},
              {"apr", {{"trunk_width", 256}, {"branch_init_gain", 1.0}, {"s_x_init", 0.0}, {"s_q_init", -3.0}, {"train", train_defaults(1e-3, 150)}}},
              {"pae", {{"fourier_levels", 3}, {"widths", {64, 128, 256}}, {"train", train_defaults(1e-3, 150)}}},
              {"decoder", {{"widths", {512, 1024, 2048}}, {"combine", "sum"}, {"train", train_defaults(1e-2, 30)}}},
              {"rpr", {{"trunk_width", 256}, {"train", train_defaults(1e-3, 150)}}},
              {"refine", refine::RefineConfig{}.to_json()},
              {"guess", {{"sigma_fraction", 0.1}, {"orientation_jitter_deg", 1.0}, {"trials", 100}}},
              {"decoder_eval", {{"offset_fraction", 0.5}}},
              {"ablation", {{"fourier_levels", {0, 3, 6}}}}};
}

RunConfig::RunConfig() : values_(defaults()) {}

RunConfig RunConfig::from_json(const json& overrides) {
  RunConfig c;
  merge_strict(c.values_, overrides);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ValidationError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::string::size_type end = key.size();
  while (true) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    if (part.empty()) throw ValidationError("override key '" + key + "' has an empty component");
    patch = json{{part, patch}};
    if (dot == std::string::npos) break;
    end = dot;
  }
  merge_strict(values_, patch);
}

std::string RunConfig::digest() const { return json_digest(values_); }

std::string RunConfig::model_digest(std::string_view model) const {
  json j{{"seed", values_.at("seed")},
         {"latent_dim", values_.at("latent_dim")},
         {"dataset", values_.at("dataset")},
         {"model", std::string(model)},
         {"settings", section(values_, model)}};
  return json_digest(j);
}

std::string RunConfig::name() const { return values_.at("name").get<std::string>(); }

std::filesystem::path RunConfig::run_dir() const {
  return std::filesystem::path(values_.at("output_dir").get<std::string>()) / name();
}

std::uint64_t RunConfig::seed() const { return values_.at("seed").get<std::uint64_t>(); }
std::size_t RunConfig::latent_dim() const { return values_.at("latent_dim").get<std::size_t>(); }

sim::DatasetConfig RunConfig::dataset() const {
  json ds = values_.at("dataset");
  ds["seed"] = seed();
  return sim::DatasetConfig::from_json(ds);
}

models::AprConfig RunConfig::apr() const {
  const json& s = values_.at("apr");
  models::AprConfig c;
  c.resolution = dataset().resolution;
  c.latent_dim = latent_dim();
  c.trunk_width = s.at("trunk_width").get<std::size_t>();
  c.branch_init_gain = s.at("branch_init_gain").get<double>();
  c.initial_weights = {s.at("s_x_init").get<double>(), s.at("s_q_init").get<double>()};
  return c;
}

models::PaeConfig RunConfig::pae(double position_scale) const {
  const json& s = values_.at("pae");
  models::PaeConfig c;
  c.latent_dim = latent_dim();
  c.fourier_levels = s.at("fourier_levels").get<std::size_t>();
  c.widths = s.at("widths").get<std::vector<std::size_t>>();
  c.n_scenes = dataset().n_scenes;
  c.position_scale = position_scale;
  return c;
}

models::DecoderConfig RunConfig::decoder() const {
  json j = values_.at("decoder");
  j.erase("train");
  j["latent_dim"] = latent_dim();
  j["resolution"] = dataset().resolution;
  return models::DecoderConfig::from_json(j);
}

models::RprConfig RunConfig::rpr() const {
  models::RprConfig c;
  c.resolution = dataset().resolution;
  c.latent_dim = latent_dim();
  c.trunk_width = values_.at("rpr").at("trunk_width").get<std::size_t>();
  return c;
}

train::TrainConfig RunConfig::training(std::string_view model) const {
  if (model != "apr" && model != "pae" && model != "decoder" && model != "rpr") {
    throw ValidationError("no training settings for model '" + std::string(model) + "'");
  }
  json j = section(values_, model).at("train");
  j["seed"] = seed();
  return train::TrainConfig::from_json(j);
}

refine::RefineConfig RunConfig::refine() const { return refine::RefineConfig::from_json(values_.at("refine")); }

GuessSettings RunConfig::guess() const {
  const json& s = values_.at("guess");
  return {s.at("sigma_fraction").get<double>(), s.at("orientation_jitter_deg").get<double>(),
          s.at("trials").get<std::size_t>()};
}

double RunConfig::decoder_offset_fraction() const {
  return values_.at("decoder_eval").at("offset_fraction").get<double>();
}

std::vector<std::size_t> RunConfig::ablation_levels() const {
  return values_.at("ablation").at("fourier_levels").get<std::vector<std::size_t>>();
}

}  // namespace pae::config
