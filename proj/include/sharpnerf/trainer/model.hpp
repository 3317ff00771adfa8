#pragma once

#include <optional>
#include <string>

#include "sharpnerf/awp/weight_proposal.hpp"
#include "sharpnerf/field/nerf.hpp"
#include "sharpnerf/kernel/rigid_blur.hpp"

namespace sharpnerf::train {

enum class ModelKind { kFull, kKernelOnly, kNaive };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  field::FieldConfig field;
  kernel::RigidBlurConfig rbk;  // rbk.n_images comes from the dataset
  std::size_t awp_embed_dim = 64;
  std::size_t awp_cond_dim = 32;
  std::size_t awp_corr_dim = 16;
  std::size_t awp_hidden = 64;
  ModelKind kind = ModelKind::kFull;

  bool use_kernel() const { return kind != ModelKind::kNaive; }
  bool use_awp() const { return kind == ModelKind::kFull; }

  awp::AwpConfig awp_config() const {
    awp::AwpConfig a;
    a.feature_dim = field.feature_dim;
    a.embed_dim = awp_embed_dim;
    a.cond_dim = awp_cond_dim;
    a.corr_dim = awp_corr_dim;
    a.mam_hidden = awp_hidden;
    a.latent_dim = rbk.latent_dim;
    a.m_dir = field.m_dir;
    return a;
  }
};

// Two field networks (coarse supervision and fine rendering share the
// architecture, not the weights) plus the blur kernel and the per-pixel
// weight module when enabled.
struct Model {
  Model(ModelConfig config, std::uint64_t init_seed);

  ModelConfig cfg;
  field::FieldNet coarse;
  field::FieldNet fine;
  std::optional<kernel::RigidBlurKernel> rbk;
  std::optional<awp::WeightProposal> awp;
  ad::ParameterStore store;
};

}  // namespace sharpnerf::train
