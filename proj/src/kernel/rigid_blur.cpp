#include "sharpnerf/kernel/rigid_blur.hpp"

#include "sharpnerf/nn.hpp"

namespace sharpnerf::kernel {

using ad::Tensor;

void RigidBlurKernel::init(ad::ParameterStore& store, Rng& rng) const {
  Tensor latents = Tensor::zeros({cfg_.n_images, cfg_.latent_dim});
  for (std::size_t i = 0; i < latents.size(); ++i) latents.data()[i] = rng.normal(0.0, 0.01);
  store.create(name("latent"), std::move(latents));

  std::size_t in = cfg_.latent_dim;
  for (std::size_t l = 0; l < cfg_.encoder_depth; ++l) {
    nn::init_linear(store, name("enc" + std::to_string(l)), in, cfg_.encoder_width, rng);
    in = cfg_.encoder_width;
  }

  nn::init_linear(store, name("rot_hidden"), cfg_.encoder_width, cfg_.decoder_hidden, rng);
  nn::init_linear_uniform(store, name("rot_out"), cfg_.decoder_hidden, 3 * cfg_.k, 1e-5, rng);
  nn::init_linear(store, name("trans_hidden"), cfg_.encoder_width, cfg_.decoder_hidden, rng);
  nn::init_linear_uniform(store, name("trans_out"), cfg_.decoder_hidden, 3 * cfg_.k, 1e-5, rng);
  nn::init_linear(store, name("ccw_hidden"), cfg_.encoder_width, cfg_.decoder_hidden, rng);
  nn::init_linear(store, name("ccw_out"), cfg_.decoder_hidden, cfg_.k + 1, rng);
}

Tensor RigidBlurKernel::latent(const ad::BoundParams& p, std::size_t scene) const {
  if (scene >= cfg_.n_images)
    throw ad::AdError("RigidBlurKernel: image index " + std::to_string(scene) +
                      " out of range (have " + std::to_string(cfg_.n_images) + ")");
  return ad::slice(p(name("latent")), 0, scene, scene + 1);  // (1, latent_dim)
}

KernelHeads RigidBlurKernel::heads(const ad::BoundParams& p, std::size_t scene) const {
  Tensor h = latent(p, scene);
  for (std::size_t l = 0; l < cfg_.encoder_depth; ++l)
    h = ad::relu(nn::linear(p, name("enc" + std::to_string(l)), h));

  Tensor rot = nn::linear(p, name("rot_out"),
                          ad::relu(nn::linear(p, name("rot_hidden"), h)));   // (1, 3k)
  Tensor trans = nn::linear(p, name("trans_out"),
                            ad::relu(nn::linear(p, name("trans_hidden"), h)));
  Tensor logits = nn::linear(p, name("ccw_out"),
                             ad::relu(nn::linear(p, name("ccw_hidden"), h)));  // (1, k+1)

  KernelHeads out;
  Tensor rot_rows = ad::reshape(rot, {cfg_.k, 3});
  Tensor trans_rows = ad::reshape(trans, {cfg_.k, 3});
  for (std::size_t q = 0; q < cfg_.k; ++q) {
    Tensor r = ad::reshape(ad::slice(rot_rows, 0, q, q + 1), {3});
    Tensor v = ad::reshape(ad::slice(trans_rows, 0, q, q + 1), {3});
    out.transforms.push_back(screw_to_transform(r, v));
    out.screw_r.push_back(std::move(r));
    out.screw_v.push_back(std::move(v));
  }

  // sigmoid then normalize. Computed as softmax(log sigmoid(x)), which is the
  // same convex vector but survives fully saturated logits.
  Tensor flat_logits = ad::reshape(logits, {cfg_.k + 1});
  Tensor log_sig = ad::neg(ad::softplus(ad::neg(flat_logits)));
  out.weights = ad::softmax_axis(log_sig, 0);
  return out;
}

std::pair<std::vector<MotionRecord>, std::vector<double>> RigidBlurKernel::export_motions(
    const ad::ParameterStore& store, std::size_t scene) const {
  ad::BoundParams p(store, nullptr);
  KernelHeads h = heads(p, scene);

  std::vector<MotionRecord> records;
  for (std::size_t q = 0; q < cfg_.k; ++q) {
    MotionRecord rec;
    rec.scene = scene;
    rec.motion = q + 1;
    rec.screw.r = {h.screw_r[q].at(0), h.screw_r[q].at(1), h.screw_r[q].at(2)};
    rec.screw.v = {h.screw_v[q].at(0), h.screw_v[q].at(1), h.screw_v[q].at(2)};
    rec.transform = screw_to_transform(rec.screw);
    rec.weight = h.weights.at(q + 1);
    records.push_back(rec);
  }
  std::vector<double> weights(h.weights.data(), h.weights.data() + h.weights.size());
  return {std::move(records), std::move(weights)};
}

Tensor compose_colors(const Tensor& colors, const Tensor& weights) {
  if (colors.rank() != 3 || colors.shape()[2] != 3)
    throw ad::AdError("compose_colors: colors must be (R, k+1, 3), got " +
                      ad::shape_str(colors.shape()));
  const std::size_t motions = colors.shape()[1];
  Tensor w = weights;
  if (w.rank() == 1) {
    if (w.shape()[0] != motions)
      throw ad::AdError("compose_colors: " + std::to_string(w.shape()[0]) + " weights for " +
                        std::to_string(motions) + " colors");
    w = ad::reshape(w, {1, motions, 1});
  } else if (w.rank() == 2) {
    if (w.shape()[0] != colors.shape()[0] || w.shape()[1] != motions)
      throw ad::AdError("compose_colors: per-ray weights " + ad::shape_str(weights.shape()) +
                        " do not match colors " + ad::shape_str(colors.shape()));
    w = ad::reshape(w, {w.shape()[0], motions, 1});
  } else {
    throw ad::AdError("compose_colors: weights must be (k+1) or (R, k+1)");
  }
  return ad::sum_axis(ad::mul(colors, w), 1);
}

}  // namespace sharpnerf::kernel
