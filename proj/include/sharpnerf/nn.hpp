#pragma once

#include <cmath>
#include <string>

#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::nn {

// Registers <name>/w (in x out) and <name>/b (out) with U(-1/sqrt(in), 1/sqrt(in)).
void init_linear(ad::ParameterStore& store, const std::string& name, std::size_t in,
                 std::size_t out, Rng& rng);

// Same layout, weights from U(-bound, bound), zero bias. Used for output layers
// that must start at (near) zero.
void init_linear_uniform(ad::ParameterStore& store, const std::string& name, std::size_t in,
                         std::size_t out, double bound, Rng& rng);

// x (B x in) -> (B x out)
ad::Tensor linear(const ad::BoundParams& p, const std::string& name, const ad::Tensor& x);

}  // namespace sharpnerf::nn
