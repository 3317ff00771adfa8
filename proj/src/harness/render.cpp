#include "sharpnerf/harness/render.hpp"

#include <cmath>

#include "sharpnerf/field/render.hpp"
#include "sharpnerf/parallel.hpp"

namespace sharpnerf::harness {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 integrate_ray(const ToyScene& scene, const field::Ray& ray, std::size_t samples) {
  // Midpoint rule over even bins; piecewise-constant scenes need no jitter.
  const double span = ray.t_far - ray.t_near;
  const double dt = span / static_cast<double>(samples);
  Vec3 color{0, 0, 0};
  double optical_depth = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = ray.t_near + (static_cast<double>(i) + 0.5) * dt;
    double sigma;
    Vec3 albedo;
    scene.sample(ray.at(t), sigma, albedo);
    if (sigma > 0.0) {
      const double trans = std::exp(-optical_depth);
      const double alpha = 1.0 - std::exp(-sigma * dt);
      color += albedo * (trans * alpha);
      optical_depth += sigma * dt;
    }
  }
  return color;
}

}  // namespace

Image render_irradiance(const ToyScene& scene, const CameraModel& cam, std::size_t samples) {
  scene.validate();
  cam.validate();
  Image img(cam.width, cam.height);
  parallel_for(cam.height, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = 0; x < cam.width; ++x) {
        const Vec3 c = integrate_ray(scene, cam.pixel_ray(x, y), samples);
        img.at(x, y, 0) = c.x;
        img.at(x, y, 1) = c.y;
        img.at(x, y, 2) = c.z;
      }
  });
  return img;
}

Image render_sharp(const ToyScene& scene, const CameraModel& cam, std::size_t samples) {
  Image img = render_irradiance(scene, cam, samples);
  for (auto& v : img.rgb) v = std::pow(v, field::kGammaExponent);
  return img;
}

CameraModel perturb_camera(const CameraModel& cam, const kernel::ScrewAxis& screw) {
  const kernel::RigidTransform t = kernel::screw_to_transform(screw);
  CameraModel out = cam;
  out.rot = t.rotation * cam.rot;
  out.pos = t.rotation * cam.pos + t.translation;
  return out;
}

Image synthesize_motion_blur(const ToyScene& scene, const CameraModel& cam, const BlurSpec& spec,
                             std::size_t samples) {
  if (spec.kind != BlurSpec::Kind::kMotion)
    throw std::runtime_error("synthesize_motion_blur: spec kind is not motion");
  if (spec.jitters.empty())
    throw std::runtime_error("synthesize_motion_blur: need at least one pose");
  Image sum(cam.width, cam.height);
  for (const auto& screw : spec.jitters) {
    Image one = render_irradiance(scene, perturb_camera(cam, screw), samples);
    for (std::size_t i = 0; i < sum.rgb.size(); ++i) sum.rgb[i] += one.rgb[i];
  }
  const double inv = 1.0 / static_cast<double>(spec.jitters.size());
  for (auto& v : sum.rgb) v = std::pow(v * inv, field::kGammaExponent);
  return sum;
}

std::vector<std::pair<double, double>> disk_pattern(std::size_t count) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(count);
  const std::size_t grid = static_cast<std::size_t>(std::floor(std::sqrt(
      static_cast<double>(count))));
  // Concentric (square-to-disk) mapping of grid midpoints.
  for (std::size_t gy = 0; gy < grid && pts.size() < count; ++gy)
    for (std::size_t gx = 0; gx < grid && pts.size() < count; ++gx) {
      const double a = 2.0 * ((static_cast<double>(gx) + 0.5) / grid) - 1.0;
      const double b = 2.0 * ((static_cast<double>(gy) + 0.5) / grid) - 1.0;
      double r, phi;
      if (a == 0.0 && b == 0.0) {
        r = 0.0;
        phi = 0.0;
      } else if (a * a > b * b) {
        r = a;
        phi = (kPi / 4.0) * (b / a);
      } else {
        r = b;
        phi = kPi / 2.0 - (kPi / 4.0) * (a / b);
      }
      pts.emplace_back(r * std::cos(phi), r * std::sin(phi));
    }
  // Golden-angle ring for any remainder.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = pts.size(); i < count; ++i) {
    const double r = std::sqrt((static_cast<double>(i) + 0.5) / static_cast<double>(count));
    const double phi = static_cast<double>(i) * golden;
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi));
  }
  return pts;
}

std::vector<kernel::ScrewAxis> motion_shake_path(std::size_t m, double rot_amplitude,
                                                 double trans_amplitude, Rng& rng) {
  if (m == 0) throw std::runtime_error("motion_shake_path: need at least one pose");
  const Vec3 axis = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
  const Vec3 slide = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
  std::vector<kernel::ScrewAxis> screws;
  screws.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double phase =
        m > 1 ? -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(m - 1) : 0.0;
    screws.push_back({axis * (rot_amplitude * phase), slide * (trans_amplitude * phase)});
  }
  return screws;
}

Image synthesize_defocus_blur(const ToyScene& scene, const CameraModel& cam,
                              const BlurSpec& spec, std::size_t samples) {
  if (spec.kind != BlurSpec::Kind::kDefocus)
    throw std::runtime_error("synthesize_defocus_blur: spec kind is not defocus");
  if (spec.aperture_radius < 0.0)
    throw std::runtime_error("synthesize_defocus_blur: negative aperture");
  if (!(spec.focus_distance > 0.0))
    throw std::runtime_error("synthesize_defocus_blur: focus distance must be positive");
  if (spec.aperture_samples == 0)
    throw std::runtime_error("synthesize_defocus_blur: need at least one aperture sample");
  scene.validate();
  cam.validate();

  if (spec.aperture_radius == 0.0) return render_sharp(scene, cam, samples);  // pinhole limit

  const auto pattern = disk_pattern(spec.aperture_samples);
  const Vec3 right = cam.right();
  const Vec3 up = cam.up();

  Image img(cam.width, cam.height);
  parallel_for(cam.height, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y)
      for (std::size_t x = 0; x < cam.width; ++x) {
        const field::Ray central = cam.pixel_ray(x, y);
        const Vec3 focus = central.at(spec.focus_distance);
        Vec3 acc{0, 0, 0};
        for (const auto& [du, dv] : pattern) {
          const Vec3 origin =
              cam.pos + right * (du * spec.aperture_radius) + up * (dv * spec.aperture_radius);
          field::Ray ray(origin, focus - origin, central.t_near, central.t_far);
          acc += integrate_ray(scene, ray, samples);
        }
        const double inv = 1.0 / static_cast<double>(pattern.size());
        img.at(x, y, 0) = std::pow(acc.x * inv, field::kGammaExponent);
        img.at(x, y, 1) = std::pow(acc.y * inv, field::kGammaExponent);
        img.at(x, y, 2) = std::pow(acc.z * inv, field::kGammaExponent);
      }
  });
  return img;
}

}  // namespace sharpnerf::harness
