#pragma once

#include <string>

#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::field {

struct FieldConfig {
  std::size_t depth = 8;         // trunk layers
  std::size_t width = 256;
  std::size_t feature_dim = 128; // channels of the layer feeding the color head
  std::size_t m_pos = 10;
  std::size_t m_dir = 4;
  std::size_t skip_layer = 4;    // trunk layer whose input re-injects the encoded position

  std::size_t pos_enc_dim() const { return 3 + 6 * m_pos; }
  std::size_t dir_enc_dim() const { return 3 + 6 * m_dir; }
};

// Batched field response: one row per query point.
struct FieldOutput {
  ad::Tensor density;   // (B)    softplus-activated, >= 0
  ad::Tensor radiance;  // (B,3)  sigmoid-activated scene irradiance
  ad::Tensor feature;   // (B,feature_dim) activation of the layer before the color head
};

// The radiance field MLP. Density is a function of the encoded position only;
// the encoded direction enters after the density head.
class FieldNet {
 public:
  FieldNet(FieldConfig cfg, std::string prefix) : cfg_(cfg), prefix_(std::move(prefix)) {}

  const FieldConfig& config() const { return cfg_; }

  void init(ad::ParameterStore& store, Rng& rng) const;

  FieldOutput eval(const ad::BoundParams& p, const ad::Tensor& pos_enc,
                   const ad::Tensor& dir_enc) const;

 private:
  std::string layer(const std::string& name) const { return prefix_ + "/" + name; }

  FieldConfig cfg_;
  std::string prefix_;
};

}  // namespace sharpnerf::field
