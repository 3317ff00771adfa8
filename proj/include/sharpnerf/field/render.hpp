#pragma once

#include <span>
#include <vector>

#include "sharpnerf/autodiff/tensor.hpp"
#include "sharpnerf/geometry.hpp"

namespace sharpnerf::field {

constexpr double kGammaExponent = 1.0 / 2.2;

// Batched compositing state, one row per ray.
struct RenderResult {
  ad::Tensor color;          // (R,3) pre-tonemap
  ad::Tensor weights;        // (R,N)
  ad::Tensor transmittance;  // (R,N) with T_1 = 1
  ad::Tensor expected_depth; // (R)
};

// Composites per-sample density/radiance along each ray:
//   color = sum_i T_i (1 - exp(-sigma_i * delta_i)) c_i,
//   T_i = exp(-sum_{j<i} sigma_j delta_j),
// with delta_i = t_{i+1} - t_i and the last delta closing to t_far. Expected
// depth is the weight-normalized sum of sample positions.
// t: (R,N) sorted per row (checked); t_far: per-ray bound; density: (R,N);
// radiance: (R,N,3).
RenderResult volume_render(const std::vector<std::vector<double>>& t,
                           std::span<const double> t_far, const ad::Tensor& density,
                           const ad::Tensor& radiance);

// Single-ray convenience over the batched form.
RenderResult volume_render(std::span<const double> t, double t_far, const ad::Tensor& density,
                           const ad::Tensor& radiance);

// Non-differentiable render used by the analytic harness.
struct PlainRender {
  Vec3 color;
  std::vector<double> weights;
  std::vector<double> transmittance;
  double expected_depth = 0.0;
};
PlainRender volume_render_plain(std::span<const double> t, double t_far,
                                std::span<const double> sigma, std::span<const Vec3> radiance);

// g(c) = c^(1/2.2) per channel; domain [0, inf).
ad::Tensor tone_map(const ad::Tensor& c);
Vec3 tone_map(const Vec3& c);

}  // namespace sharpnerf::field
