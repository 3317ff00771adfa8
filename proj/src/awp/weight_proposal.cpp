#include "sharpnerf/awp/weight_proposal.hpp"

#include "sharpnerf/field/encoding.hpp"
#include "sharpnerf/nn.hpp"

namespace sharpnerf::awp {

using ad::Shape;
using ad::Tensor;

Tensor attentive_pool(const Tensor& x, std::size_t axis, const Tensor& score_w,
                      const Tensor& score_b) {
  if (x.rank() < 2) throw ad::AdError("attentive_pool: tensor must have channels last");
  if (axis + 1 >= x.rank()) throw ad::AdError("attentive_pool: cannot pool the channel axis");
  const std::size_t channels = x.shape().back();
  if (score_w.shape() != Shape{channels, 1})
    throw ad::AdError("attentive_pool: score layer expects (" + std::to_string(channels) + ",1)");

  Shape score_shape(x.shape().begin(), x.shape().end() - 1);
  Tensor flat = ad::reshape(x, {x.size() / channels, channels});
  Tensor scores = ad::reshape(ad::add(ad::matmul(flat, score_w), score_b), score_shape);
  Tensor sm = ad::softmax_axis(scores, axis);

  Shape expanded = score_shape;
  expanded.push_back(1);
  return ad::sum_axis(ad::mul(x, ad::reshape(sm, expanded)), axis);
}

void WeightProposal::init(ad::ParameterStore& store, Rng& rng) const {
  std::size_t in = cfg_.feature_dim;
  for (int l = 0; l < 4; ++l) {
    nn::init_linear(store, name("embed" + std::to_string(l)), in, cfg_.embed_dim, rng);
    in = cfg_.embed_dim;
  }

  const std::size_t cond_in = cfg_.embed_dim + cfg_.dir_enc_dim() + cfg_.latent_dim;
  nn::init_linear(store, name("cond0"), cond_in, cfg_.cond_dim, rng);
  nn::init_linear(store, name("cond1"), cfg_.cond_dim, cfg_.cond_dim, rng);

  nn::init_linear(store, name("pool_embed"), cfg_.embed_dim, cfg_.cond_dim, rng);
  nn::init_linear(store, name("pool_motion"), cfg_.cond_dim, 1, rng);
  nn::init_linear(store, name("pool_sample"), cfg_.cond_dim, 1, rng);
  nn::init_linear(store, name("proj_sample"), cfg_.cond_dim, cfg_.corr_dim, rng);
  nn::init_linear(store, name("proj_motion"), cfg_.cond_dim, cfg_.corr_dim, rng);
  nn::init_linear(store, name("proj_cond"), cfg_.cond_dim, cfg_.corr_dim, rng);
  nn::init_linear(store, name("mix0"), 2 * cfg_.corr_dim, cfg_.mam_hidden, rng);
  nn::init_linear(store, name("mix1"), cfg_.mam_hidden, cfg_.cond_dim, rng);

  nn::init_linear(store, name("final"), 1, 1, rng);
}

Tensor WeightProposal::embed_depth_features(const ad::BoundParams& p, const Tensor& zeta) const {
  if (zeta.rank() != 4 || zeta.shape()[3] != cfg_.feature_dim)
    throw ad::AdError("embed_depth_features: expected (R,Nm,Ns," +
                      std::to_string(cfg_.feature_dim) + "), got " + ad::shape_str(zeta.shape()));
  const std::size_t slots = zeta.size() / cfg_.feature_dim;
  Tensor h = ad::reshape(zeta, {slots, cfg_.feature_dim});
  for (int l = 0; l < 4; ++l)
    h = ad::relu(nn::linear(p, name("embed" + std::to_string(l)), h));
  return ad::reshape(h, {zeta.shape()[0], zeta.shape()[1], zeta.shape()[2], cfg_.embed_dim});
}

Tensor WeightProposal::feature_modulation(const Tensor& zeta_hat, const Tensor& delta) {
  if (zeta_hat.rank() != 4)
    throw ad::AdError("feature_modulation: embedded features must be (R,Nm,Ns,C)");
  const std::size_t rays = zeta_hat.shape()[0];
  const std::size_t motions = zeta_hat.shape()[1];
  const std::size_t samples = zeta_hat.shape()[2];
  const std::size_t channels = zeta_hat.shape()[3];
  if (delta.shape() != Shape{rays, motions, samples})
    throw ad::AdError("feature_modulation: delta must be (R,Nm,Ns), got " +
                      ad::shape_str(delta.shape()));
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (delta.data()[i] < 0.0) throw ad::AdError("feature_modulation: negative sample distance");

  // Work with samples as the innermost axis so the exclusive prefix sum is a
  // single matmul against a strictly-upper-triangular ones matrix.
  Tensor x = ad::mul(zeta_hat, ad::reshape(delta, {rays, motions, samples, 1}));
  Tensor xp = ad::reshape(ad::permute(x, {0, 1, 3, 2}), {rays * motions * channels, samples});
  Tensor zp = ad::reshape(ad::permute(zeta_hat, {0, 1, 3, 2}),
                          {rays * motions * channels, samples});

  Tensor upper = Tensor::zeros({samples, samples});
  for (std::size_t j = 0; j < samples; ++j)
    for (std::size_t i = j + 1; i < samples; ++i) upper.data()[j * samples + i] = 1.0;

  Tensor trans = ad::exp(ad::neg(ad::matmul(xp, upper)));
  Tensor opacity = ad::sub(Tensor::scalar(1.0), ad::exp(ad::neg(xp)));
  Tensor summed = ad::sum_axis(ad::mul(ad::mul(trans, opacity), zp), 1);
  return ad::reshape(summed, {rays, motions, channels});
}

Tensor WeightProposal::view_condition(const ad::BoundParams& p, const Tensor& eta,
                                      const Tensor& dirs, const Tensor& latent) const {
  if (eta.rank() != 3 || eta.shape()[2] != cfg_.embed_dim)
    throw ad::AdError("view_condition: eta must be (R,Nm," + std::to_string(cfg_.embed_dim) +
                      "), got " + ad::shape_str(eta.shape()));
  const std::size_t rays = eta.shape()[0];
  const std::size_t motions = eta.shape()[1];
  if (dirs.shape() != Shape{rays, motions, 3})
    throw ad::AdError("view_condition: dirs must be (R,Nm,3)");
  if (latent.rank() != 2 || latent.shape()[0] != 1 || latent.shape()[1] != cfg_.latent_dim)
    throw ad::AdError("view_condition: latent must be (1," + std::to_string(cfg_.latent_dim) +
                      ")");

  const std::size_t rows = rays * motions;
  Tensor eta_flat = ad::reshape(eta, {rows, cfg_.embed_dim});
  Tensor dir_enc = field::positional_encode(ad::reshape(dirs, {rows, 3}), cfg_.m_dir);
  Tensor lat_rows = ad::broadcast_to(latent, {rows, cfg_.latent_dim});
  const Tensor parts[3] = {eta_flat, dir_enc, lat_rows};
  Tensor h = ad::relu(nn::linear(p, name("cond0"), ad::concat_axis(parts, 1)));
  Tensor out = nn::linear(p, name("cond1"), h);
  return ad::reshape(out, {rays, motions, cfg_.cond_dim});
}

Tensor WeightProposal::aggregate(const ad::BoundParams& p, const Tensor& zeta_hat,
                                 const Tensor& eta_hat) const {
  const std::size_t rays = zeta_hat.shape()[0];
  const std::size_t motions = zeta_hat.shape()[1];
  const std::size_t samples = zeta_hat.shape()[2];
  if (eta_hat.shape() != Shape{rays, motions, cfg_.cond_dim})
    throw ad::AdError("aggregate: eta_hat must be (R,Nm," + std::to_string(cfg_.cond_dim) +
                      "), got " + ad::shape_str(eta_hat.shape()));

  // Embed once, then summarize each axis by attentive pooling over the other.
  Tensor emb_flat = ad::relu(nn::linear(
      p, name("pool_embed"), ad::reshape(zeta_hat, {rays * motions * samples, cfg_.embed_dim})));
  Tensor emb = ad::reshape(emb_flat, {rays, motions, samples, cfg_.cond_dim});

  Tensor per_sample = attentive_pool(emb, 1, p(name("pool_motion/w")), p(name("pool_motion/b")));
  Tensor per_motion = attentive_pool(emb, 2, p(name("pool_sample/w")), p(name("pool_sample/b")));

  auto project = [&](const Tensor& t, const char* layer, std::size_t slots) {
    return ad::reshape(
        nn::linear(p, name(layer), ad::reshape(t, {rays * slots, cfg_.cond_dim})),
        Shape{rays, slots, cfg_.corr_dim});
  };
  Tensor sample_summary = project(per_sample, "proj_sample", samples);   // (R,Ns,C4)
  Tensor motion_summary = project(per_motion, "proj_motion", motions);   // (R,Nm,C4)
  Tensor cond = project(eta_hat, "proj_cond", motions);                  // (R,Nm,C4)

  // Correlation scores via broadcast products; softmax over the summarized
  // axis so each row mixes convexly.
  auto correlate = [&](const Tensor& summary, std::size_t slots) {
    Tensor lhs = ad::reshape(cond, {rays, motions, 1, cfg_.corr_dim});
    Tensor rhs = ad::reshape(summary, {rays, 1, slots, cfg_.corr_dim});
    Tensor scores = ad::sum_axis(ad::mul(lhs, rhs), 3);          // (R,Nm,slots)
    Tensor sm = ad::softmax_axis(scores, 2);
    Tensor mixed = ad::sum_axis(
        ad::mul(ad::reshape(sm, {rays, motions, slots, 1}), rhs), 2);  // (R,Nm,C4)
    return mixed;
  };
  Tensor agg_sample = correlate(sample_summary, samples);
  Tensor agg_motion = correlate(motion_summary, motions);

  const Tensor parts[2] = {agg_sample, agg_motion};
  Tensor cat = ad::reshape(ad::concat_axis(parts, 2), {rays * motions, 2 * cfg_.corr_dim});
  Tensor mixed = nn::linear(p, name("mix1"), ad::relu(nn::linear(p, name("mix0"), cat)));
  return ad::add(ad::reshape(mixed, {rays, motions, cfg_.cond_dim}), eta_hat);
}

Tensor WeightProposal::propose_weights(const ad::BoundParams& p, const Tensor& eta_tilde) const {
  if (eta_tilde.rank() != 3)
    throw ad::AdError("propose_weights: expected (R,Nm,C), got " +
                      ad::shape_str(eta_tilde.shape()));
  Tensor gap = ad::mean_axis(eta_tilde, 2);  // (R,Nm)
  Tensor score = ad::add(ad::mul(gap, p(name("final/w"))), p(name("final/b")));
  // sigmoid then per-ray normalization, in the saturation-safe softmax form.
  Tensor log_sig = ad::neg(ad::softplus(ad::neg(score)));
  return ad::softmax_axis(log_sig, 1);
}

Tensor WeightProposal::fine_weights(const ad::BoundParams& p, const Tensor& zeta,
                                    const Tensor& delta, const Tensor& dirs,
                                    const Tensor& latent) const {
  Tensor zeta_hat = embed_depth_features(p, zeta);
  Tensor eta = feature_modulation(zeta_hat, delta);
  Tensor eta_hat = view_condition(p, eta, dirs, latent);
  Tensor eta_tilde = aggregate(p, zeta_hat, eta_hat);
  return propose_weights(p, eta_tilde);
}

}  // namespace sharpnerf::awp
