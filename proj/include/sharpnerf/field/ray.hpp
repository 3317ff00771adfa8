#pragma once

#include <stdexcept>

#include "sharpnerf/geometry.hpp"

namespace sharpnerf::field {

// A world-space ray with near/far integration bounds. Directions are unit
// length by construction.
struct Ray {
  Vec3 origin;
  Vec3 direction;
  double t_near = 0.0;
  double t_far = 1.0;

  Ray() = default;
  Ray(const Vec3& o, const Vec3& d, double near, double far) : origin(o), t_near(near), t_far(far) {
    if (!(near >= 0.0) || !(near < far))
      throw std::runtime_error("Ray: bounds must satisfy 0 <= t_near < t_far");
    const double n = norm(d);
    if (!(n > 0.0)) throw std::runtime_error("Ray: zero direction");
    direction = d / n;
  }

  Vec3 at(double t) const { return origin + direction * t; }
};

}  // namespace sharpnerf::field
