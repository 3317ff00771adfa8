#pragma once

#include <span>
#include <vector>

#include "sharpnerf/field/ray.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::field {

// n jittered uniforms, one per even bin of [0,1): u_i in [i/n, (i+1)/n).
std::vector<double> stratified_uniforms(std::size_t n, Rng& rng);

// One draw per even bin of [t_near, t_far]; strictly sorted.
std::vector<double> stratified_sample(const Ray& ray, std::size_t n, Rng& rng);
std::vector<double> stratified_from_uniforms(double t_near, double t_far,
                                             std::span<const double> u);

// Inverse-CDF draws from the piecewise-constant density proportional to
// coarse_weights + 1e-5 per bin (bins = the even coarse partition). With
// all-zero weights the floor makes this plain stratified sampling. The caller
// supplies the uniforms so that several rays can share one draw.
std::vector<double> hierarchical_from_uniforms(std::span<const double> coarse_weights,
                                               double t_near, double t_far,
                                               std::span<const double> u);
std::vector<double> hierarchical_sample(std::span<const double> coarse_weights, const Ray& ray,
                                        std::size_t n_fine, Rng& rng);

// Sorted union of two sorted sequences.
std::vector<double> merge_sorted(std::span<const double> a, std::span<const double> b);

}  // namespace sharpnerf::field
