#include "sharpnerf/field/nerf.hpp"

#include "sharpnerf/nn.hpp"

namespace sharpnerf::field {

using ad::Tensor;

void FieldNet::init(ad::ParameterStore& store, Rng& rng) const {
  std::size_t in = cfg_.pos_enc_dim();
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    if (l == cfg_.skip_layer && l > 0) in += cfg_.pos_enc_dim();
    nn::init_linear(store, layer("trunk" + std::to_string(l)), in, cfg_.width, rng);
    in = cfg_.width;
  }
  nn::init_linear(store, layer("density"), cfg_.width, 1, rng);
  nn::init_linear(store, layer("bottleneck"), cfg_.width, cfg_.width, rng);
  nn::init_linear(store, layer("dir"), cfg_.width + cfg_.dir_enc_dim(), cfg_.feature_dim, rng);
  nn::init_linear(store, layer("rgb"), cfg_.feature_dim, 3, rng);
}

FieldOutput FieldNet::eval(const ad::BoundParams& p, const Tensor& pos_enc,
                           const Tensor& dir_enc) const {
  if (pos_enc.rank() != 2 || pos_enc.shape()[1] != cfg_.pos_enc_dim())
    throw ad::AdError("FieldNet: position encoding has shape " + ad::shape_str(pos_enc.shape()) +
                      ", expected (B," + std::to_string(cfg_.pos_enc_dim()) + ")");
  if (dir_enc.rank() != 2 || dir_enc.shape()[1] != cfg_.dir_enc_dim() ||
      dir_enc.shape()[0] != pos_enc.shape()[0])
    throw ad::AdError("FieldNet: direction encoding has shape " + ad::shape_str(dir_enc.shape()) +
                      ", expected (" + std::to_string(pos_enc.shape()[0]) + "," +
                      std::to_string(cfg_.dir_enc_dim()) + ")");

  Tensor h = pos_enc;
  for (std::size_t l = 0; l < cfg_.depth; ++l) {
    if (l == cfg_.skip_layer && l > 0) {
      const Tensor parts[2] = {h, pos_enc};
      h = ad::concat_axis(parts, 1);
    }
    h = ad::relu(nn::linear(p, layer("trunk" + std::to_string(l)), h));
  }

  FieldOutput out;
  out.density = ad::reshape(ad::softplus(nn::linear(p, layer("density"), h)),
                            {pos_enc.shape()[0]});

  Tensor bottleneck = nn::linear(p, layer("bottleneck"), h);
  const Tensor parts[2] = {bottleneck, dir_enc};
  out.feature = ad::relu(nn::linear(p, layer("dir"), ad::concat_axis(parts, 1)));
  out.radiance = ad::sigmoid(nn::linear(p, layer("rgb"), out.feature));
  return out;
}

}  // namespace sharpnerf::field
