#pragma once

#include <vector>

#include "sharpnerf/autodiff/tensor.hpp"

namespace sharpnerf::field {

// Sinusoidal frequency encoding of a D-vector into D + 2*D*m channels:
//   (x, sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^{m-1} pi x), cos(2^{m-1} pi x))
// applied component-wise; for D = 3 the output has 3 + 6m channels.
std::vector<double> positional_encode(const std::vector<double>& x, std::size_t m);

// Batched differentiable form: rows of x (B x D) encode independently.
ad::Tensor positional_encode(const ad::Tensor& x, std::size_t m);

inline std::size_t encoded_dim(std::size_t d, std::size_t m) { return d + 2 * d * m; }

}  // namespace sharpnerf::field
