#include "sharpnerf/harness/presets.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpnerf::harness {

ToyScene preset_scene(const std::string& name) {
  ToyScene scene;
  if (name == "two_spheres_box") {
    Primitive front;
    front.kind = Primitive::Kind::kSphere;
    front.center = {-0.45, 0.05, 0.55};
    front.half_size = {0.42, 0, 0};
    front.density = 14.0;
    front.albedo = {0.88, 0.26, 0.18};
    Primitive back;
    back.kind = Primitive::Kind::kSphere;
    back.center = {0.55, 0.22, -1.05};
    back.half_size = {0.55, 0, 0};
    back.density = 10.0;
    back.albedo = {0.2, 0.42, 0.9};
    Primitive slab;
    slab.kind = Primitive::Kind::kBox;
    slab.center = {0.0, -0.62, -0.3};
    slab.half_size = {0.95, 0.14, 1.5};
    slab.density = 12.0;
    slab.albedo = {0.35, 0.78, 0.32};
    scene.primitives = {front, back, slab};
  } else if (name == "single_sphere") {
    Primitive s;
    s.kind = Primitive::Kind::kSphere;
    s.center = {0, 0, 0};
    s.half_size = {0.6, 0, 0};
    s.density = 12.0;
    s.albedo = {0.8, 0.5, 0.2};
    scene.primitives = {s};
  } else if (name == "box_room") {
    Primitive b;
    b.kind = Primitive::Kind::kBox;
    b.center = {0, 0, 0};
    b.half_size = {0.8, 0.5, 0.6};
    b.density = 10.0;
    b.albedo = {0.6, 0.6, 0.85};
    scene.primitives = {b};
  } else {
    throw std::runtime_error("unknown scene preset: " + name);
  }
  scene.validate();
  return scene;
}

std::vector<std::string> preset_names() {
  return {"two_spheres_box", "single_sphere", "box_room"};
}

double two_spheres_box_front_depth(const CameraModel& cam) {
  const Vec3 front_center{-0.45, 0.05, 0.55};
  return dot(front_center - cam.pos, cam.forward());
}

std::vector<CameraModel> ring_cameras(std::size_t count, double radius, double height,
                                      double arc, double focal, std::size_t width,
                                      std::size_t height_px, double t_near, double t_far) {
  std::vector<CameraModel> cams;
  cams.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double angle =
        count > 1 ? -arc / 2.0 + arc * static_cast<double>(i) / static_cast<double>(count - 1)
                  : 0.0;
    const Vec3 eye{radius * std::sin(angle), height, radius * std::cos(angle)};
    cams.push_back(
        look_at(eye, {0, 0, 0}, {0, 1, 0}, focal, width, height_px, t_near, t_far));
  }
  return cams;
}

}  // namespace sharpnerf::harness
