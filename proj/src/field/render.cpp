#include "sharpnerf/field/render.hpp"

#include <cmath>
#include <stdexcept>

namespace sharpnerf::field {

using ad::Tensor;

namespace {

// Elementwise max(x, c) through the primitive set: relu(x - c) + c.
Tensor clamp_min(const Tensor& x, double c) {
  return ad::add_scalar(ad::relu(ad::add_scalar(x, -c)), c);
}

}  // namespace

RenderResult volume_render(const std::vector<std::vector<double>>& t,
                           std::span<const double> t_far, const Tensor& density,
                           const Tensor& radiance) {
  const std::size_t rays = t.size();
  if (rays == 0) throw std::runtime_error("volume_render: no rays");
  const std::size_t n = t[0].size();
  if (n == 0) throw std::runtime_error("volume_render: no samples");
  if (t_far.size() != rays) throw std::runtime_error("volume_render: t_far count mismatch");
  if (density.shape() != ad::Shape{rays, n})
    throw std::runtime_error("volume_render: density must be (R,N), got " +
                             ad::shape_str(density.shape()));
  if (radiance.shape() != ad::Shape{rays, n, 3})
    throw std::runtime_error("volume_render: radiance must be (R,N,3), got " +
                             ad::shape_str(radiance.shape()));

  Tensor tvals = Tensor::zeros({rays, n});
  Tensor delta = Tensor::zeros({rays, n});
  for (std::size_t r = 0; r < rays; ++r) {
    if (t[r].size() != n) throw std::runtime_error("volume_render: ragged sample rows");
    for (std::size_t i = 0; i + 1 < n; ++i)
      if (!(t[r][i] < t[r][i + 1]))
        throw std::runtime_error("volume_render: samples must be sorted ascending");
    for (std::size_t i = 0; i < n; ++i) {
      tvals.data()[r * n + i] = t[r][i];
      delta.data()[r * n + i] = (i + 1 < n ? t[r][i + 1] : t_far[r]) - t[r][i];
    }
  }

  // Exclusive prefix sums of sigma*delta via a strictly-upper-triangular ones
  // matrix: (R,N) x (N,N).
  Tensor upper = Tensor::zeros({n, n});
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < n; ++i) upper.data()[j * n + i] = 1.0;

  Tensor sd = ad::mul(density, delta);
  Tensor accum = ad::matmul(sd, upper);
  Tensor transmittance = ad::exp(ad::neg(accum));
  Tensor alpha = ad::sub(Tensor::scalar(1.0), ad::exp(ad::neg(sd)));
  Tensor weights = ad::mul(transmittance, alpha);

  Tensor w3 = ad::reshape(weights, {rays, n, 1});
  Tensor color = ad::sum_axis(ad::mul(w3, radiance), 1);

  Tensor wsum = ad::sum_axis(weights, 1);
  Tensor wt = ad::sum_axis(ad::mul(weights, tvals), 1);
  Tensor depth = ad::mul(wt, ad::pow_const(clamp_min(wsum, 1e-9), -1.0));

  RenderResult out;
  out.color = std::move(color);
  out.weights = std::move(weights);
  out.transmittance = std::move(transmittance);
  out.expected_depth = std::move(depth);
  return out;
}

RenderResult volume_render(std::span<const double> t, double t_far, const Tensor& density,
                           const Tensor& radiance) {
  std::vector<std::vector<double>> rows{std::vector<double>(t.begin(), t.end())};
  const double far[1] = {t_far};
  Tensor d2 = ad::reshape(density, {1, t.size()});
  Tensor r3 = ad::reshape(radiance, {1, t.size(), 3});
  return volume_render(rows, far, d2, r3);
}

PlainRender volume_render_plain(std::span<const double> t, double t_far,
                                std::span<const double> sigma, std::span<const Vec3> radiance) {
  const std::size_t n = t.size();
  if (sigma.size() != n || radiance.size() != n)
    throw std::runtime_error("volume_render_plain: size mismatch");
  PlainRender out;
  out.weights.resize(n);
  out.transmittance.resize(n);
  double accum = 0.0;
  double wsum = 0.0;
  double wt = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 < n && !(t[i] < t[i + 1]))
      throw std::runtime_error("volume_render_plain: samples must be sorted ascending");
    const double delta = (i + 1 < n ? t[i + 1] : t_far) - t[i];
    const double trans = std::exp(-accum);
    const double alpha = 1.0 - std::exp(-sigma[i] * delta);
    const double w = trans * alpha;
    out.transmittance[i] = trans;
    out.weights[i] = w;
    out.color += radiance[i] * w;
    wsum += w;
    wt += w * t[i];
    accum += sigma[i] * delta;
  }
  out.expected_depth = wt / std::max(wsum, 1e-9);
  return out;
}

Tensor tone_map(const Tensor& c) {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.data()[i] < 0.0) throw std::runtime_error("tone_map: negative component");
  return ad::pow_const(c, kGammaExponent);
}

Vec3 tone_map(const Vec3& c) {
  if (c.x < 0.0 || c.y < 0.0 || c.z < 0.0)
    throw std::runtime_error("tone_map: negative component");
  return {std::pow(c.x, kGammaExponent), std::pow(c.y, kGammaExponent),
          std::pow(c.z, kGammaExponent)};
}

}  // namespace sharpnerf::field
