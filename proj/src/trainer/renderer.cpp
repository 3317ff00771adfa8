#include "sharpnerf/trainer/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "sharpnerf/field/encoding.hpp"
#include "sharpnerf/field/render.hpp"
#include "sharpnerf/field/sampling.hpp"

namespace sharpnerf::train {

using ad::Tensor;

FieldPass run_field_pass(const field::FieldNet& net, const ad::BoundParams& params,
                         const Tensor& origins, const Tensor& dirs,
                         const std::vector<std::vector<double>>& t_rows,
                         const std::vector<double>& t_far, bool want_feature) {
  const std::size_t rays = t_rows.size();
  const std::size_t n = t_rows[0].size();

  Tensor t_const = Tensor::zeros({rays, n});
  Tensor delta = Tensor::zeros({rays, n});
  for (std::size_t r = 0; r < rays; ++r) {
    if (t_rows[r].size() != n) throw std::runtime_error("run_field_pass: ragged sample rows");
    for (std::size_t i = 0; i < n; ++i) {
      t_const.data()[r * n + i] = t_rows[r][i];
      delta.data()[r * n + i] = (i + 1 < n ? t_rows[r][i + 1] : t_far[r]) - t_rows[r][i];
    }
  }

  Tensor o3 = ad::reshape(origins, {rays, 1, 3});
  Tensor d3 = ad::reshape(dirs, {rays, 1, 3});
  Tensor t3 = ad::reshape(t_const, {rays, n, 1});
  Tensor pos = ad::add(o3, ad::mul(t3, d3));  // (R,N,3)

  Tensor pos_enc = field::positional_encode(ad::reshape(pos, {rays * n, 3}), net.config().m_pos);
  Tensor dir_enc = field::positional_encode(dirs, net.config().m_dir);  // (R,dim)
  const std::size_t ddim = net.config().dir_enc_dim();
  Tensor dir_rows = ad::reshape(
      ad::broadcast_to(ad::reshape(dir_enc, {rays, 1, ddim}), {rays, n, ddim}), {rays * n, ddim});

  field::FieldOutput fo = net.eval(params, pos_enc, dir_rows);

  field::RenderResult rr =
      field::volume_render(t_rows, t_far, ad::reshape(fo.density, {rays, n}),
                           ad::reshape(fo.radiance, {rays, n, 3}));

  FieldPass out;
  // Fully transparent rays composite to an exact 0, where the tone curve's
  // derivative diverges. A floor of 1e-10 (2.8e-5 after tone mapping, below
  // the f32 image resolution) keeps the gradients finite; below the floor the
  // relu cuts them to zero.
  constexpr double kToneFloor = 1e-10;
  ad::Tensor floored =
      ad::add_scalar(ad::relu(ad::add_scalar(rr.color, -kToneFloor)), kToneFloor);
  out.tone_color = field::tone_map(floored);
  out.weights.resize(rays);
  for (std::size_t r = 0; r < rays; ++r)
    out.weights[r].assign(rr.weights.data() + r * n, rr.weights.data() + (r + 1) * n);
  if (want_feature) out.feature = fo.feature;
  out.delta = std::move(delta);
  return out;
}

void separate_duplicates(std::vector<double>& t) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    if (t[i] == t[i + 1]) t[i + 1] = std::nextafter(t[i + 1], 1e300);
}

namespace {

std::vector<double> midpoint_uniforms(std::size_t n) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return u;
}

}  // namespace

harness::Image ModelRenderer::render_rays(const std::vector<field::Ray>& rays,
                                          std::size_t width, std::size_t height,
                                          std::size_t chunk) const {
  harness::Image img(width, height);
  ad::BoundParams params(model_.store, nullptr);
  const auto uc = midpoint_uniforms(n_coarse_);
  const auto uf = midpoint_uniforms(n_fine_);

  for (std::size_t start = 0; start < rays.size(); start += chunk) {
    const std::size_t count = std::min(chunk, rays.size() - start);
    Tensor origins = Tensor::zeros({count, 3});
    Tensor dirs = Tensor::zeros({count, 3});
    std::vector<std::vector<double>> t_rows(count);
    std::vector<double> t_far(count);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& ray = rays[start + r];
      origins.data()[r * 3] = ray.origin.x;
      origins.data()[r * 3 + 1] = ray.origin.y;
      origins.data()[r * 3 + 2] = ray.origin.z;
      dirs.data()[r * 3] = ray.direction.x;
      dirs.data()[r * 3 + 1] = ray.direction.y;
      dirs.data()[r * 3 + 2] = ray.direction.z;
      t_rows[r] = field::stratified_from_uniforms(ray.t_near, ray.t_far, uc);
      t_far[r] = ray.t_far;
    }
    FieldPass coarse =
        run_field_pass(model_.coarse, params, origins, dirs, t_rows, t_far, false);

    std::vector<std::vector<double>> fine_rows(count);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& ray = rays[start + r];
      std::vector<double> extra =
          n_fine_ ? field::hierarchical_from_uniforms(coarse.weights[r], ray.t_near, ray.t_far,
                                                      uf)
                  : std::vector<double>{};
      fine_rows[r] = field::merge_sorted(t_rows[r], extra);
      separate_duplicates(fine_rows[r]);
    }
    FieldPass fine =
        run_field_pass(model_.fine, params, origins, dirs, fine_rows, t_far, false);

    for (std::size_t r = 0; r < count; ++r) {
      const std::size_t px = (start + r) % width;
      const std::size_t py = (start + r) / width;
      for (std::size_t c = 0; c < 3; ++c) img.at(px, py, c) = fine.tone_color.at(r * 3 + c);
    }
  }
  return img;
}

harness::Image ModelRenderer::render_sharp_view(const harness::CameraModel& cam,
                                                std::size_t chunk) const {
  std::vector<field::Ray> rays;
  rays.reserve(cam.width * cam.height);
  for (std::size_t y = 0; y < cam.height; ++y)
    for (std::size_t x = 0; x < cam.width; ++x) rays.push_back(cam.pixel_ray(x, y));
  return render_rays(rays, cam.width, cam.height, chunk);
}

harness::Image ModelRenderer::render_composite_view(const harness::CameraModel& cam,
                                                    std::size_t scene,
                                                    std::size_t chunk) const {
  std::vector<field::Ray> base;
  base.reserve(cam.width * cam.height);
  for (std::size_t y = 0; y < cam.height; ++y)
    for (std::size_t x = 0; x < cam.width; ++x) base.push_back(cam.pixel_ray(x, y));

  if (!model_.cfg.use_kernel()) return render_rays(base, cam.width, cam.height, chunk);

  auto [records, weights] = model_.rbk->export_motions(model_.store, scene);

  harness::Image out(cam.width, cam.height);
  {
    harness::Image original = render_rays(base, cam.width, cam.height, chunk);
    for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] = weights[0] * original.rgb[i];
  }
  for (std::size_t q = 0; q < records.size(); ++q) {
    std::vector<field::Ray> moved;
    moved.reserve(base.size());
    for (const auto& ray : base)
      moved.push_back(kernel::transform_ray(ray, records[q].transform));
    harness::Image img = render_rays(moved, cam.width, cam.height, chunk);
    for (std::size_t i = 0; i < out.rgb.size(); ++i) out.rgb[i] += weights[q + 1] * img.rgb[i];
  }
  return out;
}

}  // namespace sharpnerf::train
