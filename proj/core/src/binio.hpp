#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pae/error.hpp"

namespace pae::detail {

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits;
    std::memcpy(&bits, &value, sizeof(T));
    U swapped = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) swapped |= ((bits >> (8 * i)) & 0xFF) << (8 * (sizeof(T) - 1 - i));
    std::memcpy(&value, &swapped, sizeof(T));
    return value;
  }
}

template <typename T>
void append_le(std::string& out, const T* values, std::size_t n) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  const std::size_t start = out.size();
  out.resize(start + n * sizeof(T));
  for (std::size_t i = 0; i < n; ++i) {
    const T v = to_little_endian(values[i]);
    std::memcpy(out.data() + start + i * sizeof(T), &v, sizeof(T));
  }
}

template <typename T>
void read_le(const char* bytes, T* values, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    T v;
    std::memcpy(&v, bytes + i * sizeof(T), sizeof(T));
    values[i] = to_little_endian(v);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace pae::detail
