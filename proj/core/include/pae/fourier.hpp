#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pae {

/// Sinusoidal lifting applied per coordinate. `levels == 0` passes the input
/// through unchanged, which is how the no-Fourier ablation is expressed.
struct FourierSpec {
  std::size_t levels = 6;
  bool include_input = true;

  /// Length of the encoding of an m-vector: m * (2L + 1) with the input kept.
  std::size_t encoded_length(std::size_t m) const;
};

/// For each coordinate p, emits p followed by sin(2^k pi p), cos(2^k pi p)
/// for k = 0 .. L-1. Coordinates are concatenated in input order.
std::vector<double> fourier_encode(std::span<const double> v, const FourierSpec& spec);

/// Appends the encoding of `v` to `out`.
void fourier_encode_into(std::span<const double> v, const FourierSpec& spec, std::vector<double>& out);

}  // namespace pae
