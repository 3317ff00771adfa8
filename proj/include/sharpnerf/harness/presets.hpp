#pragma once

#include <string>
#include <vector>

#include "sharpnerf/harness/camera.hpp"
#include "sharpnerf/harness/scene.hpp"

namespace sharpnerf::harness {

// Named analytic scenes for the synthesis and evaluation tooling.
//   two_spheres_box  the standard benchmark layout: two spheres over a slab
//   single_sphere    one centered sphere
//   box_room         a single large box
ToyScene preset_scene(const std::string& name);
std::vector<std::string> preset_names();

// The front sphere's center distance from a ring camera, for focusing.
double two_spheres_box_front_depth(const CameraModel& cam);

// `count` cameras on a circle of `radius` at `height`, all aimed at the
// origin, evenly spread over `arc` radians.
std::vector<CameraModel> ring_cameras(std::size_t count, double radius, double height,
                                      double arc, double focal, std::size_t width,
                                      std::size_t height_px, double t_near, double t_far);

}  // namespace sharpnerf::harness
