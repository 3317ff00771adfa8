#pragma once

#include "sharpnerf/autodiff/tensor.hpp"
#include "sharpnerf/field/ray.hpp"
#include "sharpnerf/geometry.hpp"

namespace sharpnerf::kernel {

// Rigid motion as a 6-vector (r; v): r is axis-angle (theta = |r|), v maps to
// the translation through G(r).
struct ScrewAxis {
  Vec3 r;
  Vec3 v;
};

struct RigidTransform {
  Mat3 rotation;
  Vec3 translation;
};

enum class Branch { kAuto, kTaylor, kExact };

// Closed-form exponential:
//   R = I + (sin/theta) [r]x + ((1-cos)/theta^2) [r]x^2
//   p = G v,  G = I + ((1-cos)/theta^2) [r]x + ((theta-sin)/theta^3) [r]x^2
// For theta < 1e-6 the coefficients switch to their Taylor forms in theta^2,
// which keeps the map total and smooth at r = 0. `forced` pins the branch so
// tests can measure the mismatch at the switch.
RigidTransform screw_to_transform(const ScrewAxis& s, Branch forced = Branch::kAuto);

// Origin moves affinely, the direction only rotates; bounds are unchanged.
field::Ray transform_ray(const field::Ray& ray, const RigidTransform& t);
field::Ray transform_ray(const field::Ray& ray, const ScrewAxis& s);

// Differentiable form. r and v are 3-vectors on a tape; the Taylor branch is
// chosen from forward values and stays polynomial in theta^2, so gradients are
// finite at r = 0.
struct AdTransform {
  ad::Tensor rotation;     // (3,3)
  ad::Tensor translation;  // (3)
};
AdTransform screw_to_transform(const ad::Tensor& r, const ad::Tensor& v);

// Batched ray transform: origins/directions (R,3) against one rigid motion.
// Returns {origins', directions'}.
std::pair<ad::Tensor, ad::Tensor> transform_rays(const ad::Tensor& origins,
                                                 const ad::Tensor& directions,
                                                 const AdTransform& t);

}  // namespace sharpnerf::kernel
