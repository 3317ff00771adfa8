#pragma once

#include <string>
#include <vector>

#include "sharpnerf/autodiff/params.hpp"
#include "sharpnerf/kernel/screw.hpp"
#include "sharpnerf/rng.hpp"

namespace sharpnerf::kernel {

struct RigidBlurConfig {
  std::size_t k = 4;            // rigid motions per scene
  std::size_t n_images = 1;     // latent table rows
  std::size_t latent_dim = 64;
  std::size_t encoder_width = 64;
  std::size_t encoder_depth = 4;
  std::size_t decoder_hidden = 32;
};

// Per-scene blur description decoded from the scene latent: k screw motions
// plus k+1 composition weights (index 0 is the untransformed ray's).
struct KernelHeads {
  std::vector<ad::Tensor> screw_r;       // k tensors (3)
  std::vector<ad::Tensor> screw_v;       // k tensors (3)
  std::vector<AdTransform> transforms;   // k rigid motions
  ad::Tensor weights;                    // (k+1), nonnegative, sums to 1
};

// Snapshot of one decoded motion, for the text export.
struct MotionRecord {
  std::size_t scene = 0;
  std::size_t motion = 0;  // 1..k
  ScrewAxis screw;
  RigidTransform transform;
  double weight = 0.0;
};

// Latent table + shared encoder + three decoder heads. The decoders' output
// layers start in U(-1e-5, 1e-5) with zero bias so every motion is the
// identity before training.
class RigidBlurKernel {
 public:
  RigidBlurKernel(RigidBlurConfig cfg, std::string prefix = "rbk")
      : cfg_(cfg), prefix_(std::move(prefix)) {}

  const RigidBlurConfig& config() const { return cfg_; }

  void init(ad::ParameterStore& store, Rng& rng) const;

  // Learnable latent row for image s, shape (1, latent_dim).
  ad::Tensor latent(const ad::BoundParams& p, std::size_t scene) const;

  KernelHeads heads(const ad::BoundParams& p, std::size_t scene) const;

  // Forward-only decode of scene s for inspection dumps. weights[0] rides on
  // no MotionRecord; the full weight vector is returned separately.
  std::pair<std::vector<MotionRecord>, std::vector<double>> export_motions(
      const ad::ParameterStore& store, std::size_t scene) const;

 private:
  std::string name(const std::string& s) const { return prefix_ + "/" + s; }

  RigidBlurConfig cfg_;
  std::string prefix_;
};

// B = sum_i w_i * colors_i over k+1 per-motion colors. colors: (R, k+1, 3);
// weights: (k+1) shared across rays or (R, k+1) per ray.
ad::Tensor compose_colors(const ad::Tensor& colors, const ad::Tensor& weights);

}  // namespace sharpnerf::kernel
