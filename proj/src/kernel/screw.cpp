#include "sharpnerf/kernel/screw.hpp"

#include <cmath>

namespace sharpnerf::kernel {

using ad::Tensor;

namespace {

// Values switch branches at 1e-6 per the closed-form contract; the
// differentiable path switches at 1e-4 where the exact branch's gradient
// starts losing digits to cancellation (the Taylor value error there is
// ~1e-18, far below every stated tolerance).
constexpr double kTaylorTheta = 1e-6;
constexpr double kTaylorThetaAd = 1e-4;

struct Coeffs {
  double a;  // sin(theta)/theta
  double b;  // (1-cos(theta))/theta^2
  double c;  // (theta-sin(theta))/theta^3
};

Coeffs coeffs(double theta_sq, Branch forced) {
  const bool taylor = forced == Branch::kTaylor ||
                      (forced == Branch::kAuto && theta_sq < kTaylorTheta * kTaylorTheta);
  if (taylor) {
    return {1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0, 1.0 / 6.0 - theta_sq / 120.0};
  }
  const double theta = std::sqrt(theta_sq);
  return {std::sin(theta) / theta, (1.0 - std::cos(theta)) / theta_sq,
          (theta - std::sin(theta)) / (theta_sq * theta)};
}

}  // namespace

RigidTransform screw_to_transform(const ScrewAxis& s, Branch forced) {
  const double theta_sq = dot(s.r, s.r);
  const Coeffs cf = coeffs(theta_sq, forced);
  const Mat3 k = skew(s.r);
  const Mat3 k2 = k * k;
  RigidTransform out;
  out.rotation = Mat3::identity() + k * cf.a + k2 * cf.b;
  const Mat3 g = Mat3::identity() + k * cf.b + k2 * cf.c;
  out.translation = g * s.v;
  return out;
}

field::Ray transform_ray(const field::Ray& ray, const RigidTransform& t) {
  return field::Ray(t.rotation * ray.origin + t.translation, t.rotation * ray.direction,
                    ray.t_near, ray.t_far);
}

field::Ray transform_ray(const field::Ray& ray, const ScrewAxis& s) {
  return transform_ray(ray, screw_to_transform(s));
}

namespace {

// [r]x assembled from scalar slices, so gradients flow back into r.
Tensor skew_ad(const Tensor& r) {
  Tensor z = Tensor::zeros({1});
  Tensor r0 = ad::slice(r, 0, 0, 1);
  Tensor r1 = ad::slice(r, 0, 1, 2);
  Tensor r2 = ad::slice(r, 0, 2, 3);
  const Tensor entries[9] = {z,           ad::neg(r2), r1,          r2,         z,
                             ad::neg(r0), ad::neg(r1), r0,          z};
  return ad::reshape(ad::concat_axis(entries, 0), {3, 3});
}

}  // namespace

AdTransform screw_to_transform(const Tensor& r, const Tensor& v) {
  if (r.shape() != ad::Shape{3} || v.shape() != ad::Shape{3})
    throw ad::AdError("screw_to_transform: r and v must be 3-vectors");

  Tensor theta_sq = ad::reshape(ad::sum_axis(ad::mul(r, r), 0), {});
  Tensor a, b, c;
  if (theta_sq.item() < kTaylorThetaAd * kTaylorThetaAd) {
    a = ad::add_scalar(ad::scale(theta_sq, -1.0 / 6.0), 1.0);
    b = ad::add_scalar(ad::scale(theta_sq, -1.0 / 24.0), 0.5);
    c = ad::add_scalar(ad::scale(theta_sq, -1.0 / 120.0), 1.0 / 6.0);
  } else {
    Tensor theta = ad::pow_const(theta_sq, 0.5);
    Tensor inv_sq = ad::pow_const(theta_sq, -1.0);
    a = ad::mul(ad::sin(theta), ad::pow_const(theta, -1.0));
    b = ad::mul(ad::sub(Tensor::scalar(1.0), ad::cos(theta)), inv_sq);
    c = ad::mul(ad::sub(theta, ad::sin(theta)), ad::pow_const(ad::mul(theta_sq, theta), -1.0));
  }

  Tensor k = skew_ad(r);
  Tensor k2 = ad::matmul(k, k);
  Tensor eye = Tensor::identity(3);

  AdTransform out;
  out.rotation = ad::add(eye, ad::add(ad::mul(k, a), ad::mul(k2, b)));
  Tensor g = ad::add(eye, ad::add(ad::mul(k, b), ad::mul(k2, c)));
  out.translation = ad::reshape(ad::matmul(g, ad::reshape(v, {3, 1})), {3});
  return out;
}

std::pair<Tensor, Tensor> transform_rays(const Tensor& origins, const Tensor& directions,
                                         const AdTransform& t) {
  if (origins.rank() != 2 || origins.shape()[1] != 3)
    throw ad::AdError("transform_rays: origins must be (R,3)");
  if (directions.shape() != origins.shape())
    throw ad::AdError("transform_rays: directions must match origins");
  Tensor rot_t = ad::transpose2d(t.rotation);
  Tensor o = ad::add(ad::matmul(origins, rot_t), t.translation);
  Tensor d = ad::matmul(directions, rot_t);
  return {std::move(o), std::move(d)};
}

}  // namespace sharpnerf::kernel
