#pragma once

#include <stdexcept>
#include <vector>

#include "sharpnerf/geometry.hpp"

namespace sharpnerf::harness {

// Constant-density analytic primitives; exact geometry, no meshes.
struct Primitive {
  enum class Kind { kSphere, kBox };
  Kind kind = Kind::kSphere;
  Vec3 center;
  Vec3 half_size;  // sphere: half_size.x is the radius
  double density = 1.0;
  Vec3 albedo{1, 1, 1};

  bool contains(const Vec3& p) const {
    if (kind == Kind::kSphere) {
      const Vec3 d = p - center;
      return dot(d, d) <= half_size.x * half_size.x;
    }
    const Vec3 d = p - center;
    return std::abs(d.x) <= half_size.x && std::abs(d.y) <= half_size.y &&
           std::abs(d.z) <= half_size.z;
  }
};

struct ToyScene {
  std::vector<Primitive> primitives;

  void validate() const {
    for (const auto& pr : primitives) {
      if (pr.density < 0.0) throw std::runtime_error("ToyScene: negative density");
      for (int c = 0; c < 3; ++c)
        if (pr.albedo[c] < 0.0 || pr.albedo[c] > 1.0)
          throw std::runtime_error("ToyScene: albedo outside [0,1]");
    }
  }

  // Density-weighted blend where primitives overlap; black background.
  void sample(const Vec3& p, double& sigma, Vec3& albedo) const {
    sigma = 0.0;
    albedo = {0, 0, 0};
    for (const auto& pr : primitives) {
      if (!pr.contains(p)) continue;
      sigma += pr.density;
      albedo += pr.albedo * pr.density;
    }
    if (sigma > 0.0) albedo = albedo / sigma;
  }
};

}  // namespace sharpnerf::harness
