#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace pae {

/// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);
/// Digest of the compact serialization of `j` (object keys are sorted).
std::string json_digest(const nlohmann::json& j);

}  // namespace pae
