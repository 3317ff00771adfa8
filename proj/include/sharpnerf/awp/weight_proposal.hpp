#pragma once

#include <string>

#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::awp {

struct AwpConfig {
  std::size_t feature_dim = 128;  // channels of the per-sample field features
  std::size_t embed_dim = 64;     // embedded feature channels
  std::size_t cond_dim = 32;      // view-conditioned channels
  std::size_t corr_dim = 16;      // correlation-space channels
  std::size_t mam_hidden = 64;
  std::size_t latent_dim = 64;    // scene latent channels
  std::size_t m_dir = 4;          // direction encoding frequencies

  std::size_t dir_enc_dim() const { return 3 + 6 * m_dir; }
};

// Attentive pooling: a one-channel score per slot, softmax over the pooled
// axis, then a score-weighted sum. x has channels last; axis is any other
// axis. score_w is (C,1), score_b is (1).
ad::Tensor attentive_pool(const ad::Tensor& x, std::size_t axis, const ad::Tensor& score_w,
                          const ad::Tensor& score_b);

// Per-pixel refinement of the composition weights from per-sample depth
// features. All entry points are batched with a leading ray axis R; the
// motion axis has extent k+1 and the sample axis runs over the merged
// coarse+fine samples.
class WeightProposal {
 public:
  WeightProposal(AwpConfig cfg, std::string prefix = "awp")
      : cfg_(cfg), prefix_(std::move(prefix)) {}

  const AwpConfig& config() const { return cfg_; }

  void init(ad::ParameterStore& store, Rng& rng) const;

  // (R,Nm,Ns,C1) -> (R,Nm,Ns,C2); four relu layers applied per slot.
  ad::Tensor embed_depth_features(const ad::BoundParams& p, const ad::Tensor& zeta) const;

  // Transmittance-style reduction over the sample axis:
  //   eta_i = sum_l exp(-sum_{m<l} d_m z_{i,m}) o (1 - exp(-d_l z_{i,l})) o z_{i,l}
  // zeta_hat: (R,Nm,Ns,C2), delta: (R,Nm,Ns) nonnegative -> (R,Nm,C2).
  static ad::Tensor feature_modulation(const ad::Tensor& zeta_hat, const ad::Tensor& delta);

  // Concatenates (eta, encoded direction, scene latent) per motion and applies
  // a two-layer relu MLP. dirs: (R,Nm,3); latent: (1,latent_dim) shared.
  ad::Tensor view_condition(const ad::BoundParams& p, const ad::Tensor& eta,
                            const ad::Tensor& dirs, const ad::Tensor& latent) const;

  // Motion aggregation: attentive summaries of the embedded features along
  // each axis, correlation against the conditioned features, and a residual
  // mix back to (R,Nm,cond_dim).
  ad::Tensor aggregate(const ad::BoundParams& p, const ad::Tensor& zeta_hat,
                       const ad::Tensor& eta_hat) const;

  // Channel average per motion, shared 1->1 linear, sigmoid, normalized to
  // sum 1 per ray: (R,Nm,cond_dim) -> (R,Nm).
  ad::Tensor propose_weights(const ad::BoundParams& p, const ad::Tensor& eta_tilde) const;

  // Full pipeline.
  ad::Tensor fine_weights(const ad::BoundParams& p, const ad::Tensor& zeta,
                          const ad::Tensor& delta, const ad::Tensor& dirs,
                          const ad::Tensor& latent) const;

 private:
  std::string name(const std::string& s) const { return prefix_ + "/" + s; }

  AwpConfig cfg_;
  std::string prefix_;
};

}  // namespace sharpnerf::awp
