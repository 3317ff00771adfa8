#include "sharpnerf/field/encoding.hpp"

#include <cmath>

namespace sharpnerf::field {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<double> positional_encode(const std::vector<double>& x, std::size_t m) {
  std::vector<double> out;
  out.reserve(encoded_dim(x.size(), m));
  out.insert(out.end(), x.begin(), x.end());
  double freq = kPi;
  for (std::size_t f = 0; f < m; ++f, freq *= 2.0) {
    for (double v : x) out.push_back(std::sin(freq * v));
    for (double v : x) out.push_back(std::cos(freq * v));
  }
  return out;
}

ad::Tensor positional_encode(const ad::Tensor& x, std::size_t m) {
  if (x.rank() != 2) throw ad::AdError("positional_encode: expects a (B, D) tensor");
  std::vector<ad::Tensor> parts;
  parts.reserve(1 + 2 * m);
  parts.push_back(x);
  double freq = kPi;
  for (std::size_t f = 0; f < m; ++f, freq *= 2.0) {
    ad::Tensor scaled = ad::scale(x, freq);
    parts.push_back(ad::sin(scaled));
    parts.push_back(ad::cos(scaled));
  }
  return ad::concat_axis(parts, 1);
}

}  // namespace sharpnerf::field
