#include "pae/checkpoint.hpp"

#include "binio.hpp"
#include "pae/digest.hpp"
#include "pae/error.hpp"

namespace pae {

using nlohmann::json;

void Checkpoint::capture(const ad::ParameterList& params) {
  tensors.clear();
  for (std::size_t i = 0; i < params.size(); ++i) tensors.emplace_back(params[i].name, params[i].value);
}

void Checkpoint::restore(ad::ParameterList& params) const {
  if (params.size() != tensors.size()) {
    throw ValidationError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, value] = tensors[i];
    if (params[i].name != name || params[i].value.shape() != value.shape()) {
      throw ValidationError("checkpoint tensor '" + name + "' " + ad::shape_string(value.shape()) +
                            " does not match model parameter '" + params[i].name + "' " +
                            ad::shape_string(params[i].value.shape()));
    }
    params[i].value = value;
  }
}

std::string Checkpoint::digest() const { return hex_digest(serialize_checkpoint(*this)); }

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& [name, value] : ckpt.tensors) {
    tensors.push_back({{"name", name}, {"shape", value.shape()}, {"offset", offset}});
    offset += value.numel();
  }
  const bool has_moments = !ckpt.optim.first_moment.empty();
  if (has_moments && ckpt.optim.first_moment.size() != ckpt.tensors.size()) {
    throw ValidationError("optimizer moments do not line up with checkpoint tensors");
  }
  const json header{{"format", "pae-checkpoint-1"},
                    {"kind", ckpt.kind},
                    {"model_config", ckpt.model_config},
                    {"config_digest", ckpt.config_digest},
                    {"dataset_digest", ckpt.dataset_digest},
                    {"parent_digest", ckpt.parent_digest},
                    {"epoch", ckpt.epoch},
                    {"tensors", tensors},
                    {"values", offset},
                    {"optimizer",
                     {{"kind", ad::optim_kind_name(ckpt.optim.kind)},
                      {"learning_rate", ckpt.optim.learning_rate},
                      {"beta1", ckpt.optim.beta1},
                      {"beta2", ckpt.optim.beta2},
                      {"epsilon", ckpt.optim.epsilon},
                      {"weight_decay", ckpt.optim.weight_decay},
                      {"step", ckpt.optim.step},
                      {"moments", has_moments}}},
                    {"extra", ckpt.extra}};
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + offset * 8 * (has_moments ? 3 : 1));
  for (const auto& [name, value] : ckpt.tensors) detail::append_le(out, value.ptr(), value.numel());
  if (has_moments) {
    for (const auto& m : ckpt.optim.first_moment) detail::append_le(out, m.ptr(), m.numel());
    for (const auto& v : ckpt.optim.second_moment) detail::append_le(out, v.ptr(), v.numel());
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes, const std::string& source) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw IoError("'" + source + "' is not a checkpoint (no header line)");
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::exception& e) {
    throw IoError("'" + source + "' has a malformed checkpoint header: " + e.what());
  }
  if (header.value("format", "") != "pae-checkpoint-1") throw IoError("'" + source + "' has an unknown format");

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.model_config = header.at("model_config");
  ckpt.config_digest = header.at("config_digest").get<std::string>();
  ckpt.dataset_digest = header.at("dataset_digest").get<std::string>();
  ckpt.parent_digest = header.at("parent_digest").get<std::string>();
  ckpt.epoch = header.at("epoch").get<std::uint64_t>();
  ckpt.extra = header.at("extra");
  const json& opt = header.at("optimizer");
  ckpt.optim.kind = ad::optim_kind_from_name(opt.at("kind").get<std::string>());
  ckpt.optim.learning_rate = opt.at("learning_rate").get<double>();
  ckpt.optim.beta1 = opt.at("beta1").get<double>();
  ckpt.optim.beta2 = opt.at("beta2").get<double>();
  ckpt.optim.epsilon = opt.at("epsilon").get<double>();
  ckpt.optim.weight_decay = opt.at("weight_decay").get<double>();
  ckpt.optim.step = opt.at("step").get<std::uint64_t>();
  const bool has_moments = opt.at("moments").get<bool>();

  const std::size_t values = header.at("values").get<std::size_t>();
  const std::size_t expected = newline + 1 + values * 8 * (has_moments ? 3 : 1);
  if (bytes.size() != expected) {
    throw IoError("'" + source + "' is " + std::to_string(bytes.size()) + " bytes, header implies " +
                  std::to_string(expected));
  }
  const char* blob = bytes.data() + newline + 1;
  std::vector<ad::Shape> shapes;
  for (const json& t : header.at("tensors")) {
    ad::Shape shape = t.at("shape").get<ad::Shape>();
    ad::Tensor value(shape);
    detail::read_le(blob + t.at("offset").get<std::size_t>() * 8, value.ptr(), value.numel());
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(value));
    shapes.push_back(std::move(shape));
  }
  if (has_moments) {
    const char* m = blob + values * 8;
    const char* v = blob + values * 16;
    std::size_t offset = 0;
    for (const auto& shape : shapes) {
      ad::Tensor first(shape), second(shape);
      detail::read_le(m + offset * 8, first.ptr(), first.numel());
      detail::read_le(v + offset * 8, second.ptr(), second.numel());
      offset += first.numel();
      ckpt.optim.first_moment.push_back(std::move(first));
      ckpt.optim.second_moment.push_back(std::move(second));
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  detail::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(detail::read_file(path), path.string());
}

}  // namespace pae
