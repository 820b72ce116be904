#include "pae/fourier.hpp"

#include <cmath>
#include <numbers>

#include "pae/error.hpp"

namespace pae {

std::size_t FourierSpec::encoded_length(std::size_t m) const {
  return m * (2 * levels + (include_input ? 1 : 0));
}

void fourier_encode_into(std::span<const double> v, const FourierSpec& spec, std::vector<double>& out) {
  if (v.empty()) throw ValidationError("fourier_encode: empty input");
  if (spec.levels == 0 && !spec.include_input) throw ValidationError("fourier_encode: encoding would be empty");
  for (double p : v) {
    if (!std::isfinite(p)) throw ValidationError("fourier_encode: non-finite input coordinate");
    if (spec.include_input) out.push_back(p);
    double freq = std::numbers::pi;
    for (std::size_t k = 0; k < spec.levels; ++k) {
      out.push_back(std::sin(freq * p));
      out.push_back(std::cos(freq * p));
      freq *= 2.0;
    }
  }
}

std::vector<double> fourier_encode(std::span<const double> v, const FourierSpec& spec) {
  std::vector<double> out;
  out.reserve(spec.encoded_length(v.size()));
  fourier_encode_into(v, spec, out);
  return out;
}

}  // namespace pae
