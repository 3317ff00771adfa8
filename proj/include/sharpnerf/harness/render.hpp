#pragma once

#include <vector>

#include "sharpnerf/harness/camera.hpp"
#include "sharpnerf/harness/image.hpp"
#include "sharpnerf/harness/scene.hpp"
#include "sharpnerf/kernel/screw.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::harness {

struct BlurSpec {
  enum class Kind { kNone, kMotion, kDefocus };
  Kind kind = Kind::kNone;

  // Motion: the base pose is perturbed by each screw in turn; the blurred
  // image is the irradiance average over those poses.
  std::vector<kernel::ScrewAxis> jitters;

  // Defocus: thin-lens aperture on the camera plane, focused at
  // focus_distance along each pixel's central ray.
  double aperture_radius = 0.0;
  double focus_distance = 1.0;
  std::size_t aperture_samples = 16;
};

// Dense deterministic midpoint sampling of the analytic field (no RNG);
// returns pre-tonemap irradiance.
Image render_irradiance(const ToyScene& scene, const CameraModel& cam, std::size_t samples);

// Tonemapped sharp render; `samples` >= 256 for ground-truth use.
Image render_sharp(const ToyScene& scene, const CameraModel& cam, std::size_t samples = 256);

// Camera pose rigidly moved by a screw (the whole ray bundle transforms).
CameraModel perturb_camera(const CameraModel& cam, const kernel::ScrewAxis& screw);

// Irradiance averaged over the jittered poses, then tonemapped. Blur happens
// to scene irradiance, not to the display-encoded image.
Image synthesize_motion_blur(const ToyScene& scene, const CameraModel& cam, const BlurSpec& spec,
                             std::size_t samples = 256);

// Thin-lens average over a deterministic concentric disk pattern.
Image synthesize_defocus_blur(const ToyScene& scene, const CameraModel& cam,
                              const BlurSpec& spec, std::size_t samples = 256);

// The deterministic unit-disk pattern used by the defocus path (concentric
// grid mapping, golden-angle ring for any non-square remainder).
std::vector<std::pair<double, double>> disk_pattern(std::size_t count);

// A linear shake: m poses along a random screw direction, phases spread over
// [-1, 1], rotation and translation scaled by the given amplitudes.
std::vector<kernel::ScrewAxis> motion_shake_path(std::size_t m, double rot_amplitude,
                                                 double trans_amplitude, Rng& rng);

}  // namespace sharpnerf::harness
