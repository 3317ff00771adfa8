#pragma once

#include <cstddef>
#include <stdexcept>

#include "sharpnerf/field/ray.hpp"
#include "sharpnerf/geometry.hpp"

namespace sharpnerf::harness {

// Pinhole camera, camera-to-world pose. The camera looks along its local -z,
// local +x is image right, local +y is image up (image rows grow downward).
struct CameraModel {
  Mat3 rot = Mat3::identity();  // columns: right, up, back
  Vec3 pos;
  double focal = 50.0;  // pixels
  std::size_t width = 64;
  std::size_t height = 64;
  double t_near = 0.1;
  double t_far = 10.0;

  void validate() const {
    Mat3 rtr = rot.transposed() * rot;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-9)
          throw std::runtime_error("CameraModel: rotation is not orthonormal");
    if (!(t_near >= 0.0) || !(t_near < t_far))
      throw std::runtime_error("CameraModel: bad near/far bounds");
    if (focal <= 0.0 || width == 0 || height == 0)
      throw std::runtime_error("CameraModel: bad intrinsics");
  }

  // Ray through the center of pixel (x, y), x to the right, y downward.
  field::Ray pixel_ray(std::size_t x, std::size_t y) const {
    const double cx = 0.5 * static_cast<double>(width);
    const double cy = 0.5 * static_cast<double>(height);
    const Vec3 dir_cam{(static_cast<double>(x) + 0.5 - cx) / focal,
                       -(static_cast<double>(y) + 0.5 - cy) / focal, -1.0};
    return field::Ray(pos, rot * dir_cam, t_near, t_far);
  }

  Vec3 right() const { return {rot(0, 0), rot(1, 0), rot(2, 0)}; }
  Vec3 up() const { return {rot(0, 1), rot(1, 1), rot(2, 1)}; }
  Vec3 forward() const { return {-rot(0, 2), -rot(1, 2), -rot(2, 2)}; }
};

inline CameraModel look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint,
                           double focal, std::size_t width, std::size_t height, double t_near,
                           double t_far) {
  const Vec3 fwd = normalized(target - eye);
  const Vec3 right = normalized(cross(fwd, up_hint));
  const Vec3 up = cross(right, fwd);
  CameraModel cam;
  cam.rot.m = {right.x, up.x, -fwd.x, right.y, up.y, -fwd.y, right.z, up.z, -fwd.z};
  cam.pos = eye;
  cam.focal = focal;
  cam.width = width;
  cam.height = height;
  cam.t_near = t_near;
  cam.t_far = t_far;
  cam.validate();
  return cam;
}

}  // namespace sharpnerf::harness
