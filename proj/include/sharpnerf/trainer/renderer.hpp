#pragma once

#include <vector>

#include "sharpnerf/harness/camera.hpp"
#include "sharpnerf/harness/image.hpp"
#include "sharpnerf/trainer/model.hpp"

namespace sharpnerf::train {

// One coarse-or-fine network evaluation along a batch of rays, volume
// rendered and tonemapped.
struct FieldPass {
  ad::Tensor tone_color;                     // (R,3)
  std::vector<std::vector<double>> weights;  // per-ray sample weights (plain values)
  ad::Tensor feature;                        // (R*Ns, C1) when requested
  ad::Tensor delta;                          // constant (R,Ns)
};

FieldPass run_field_pass(const field::FieldNet& net, const ad::BoundParams& params,
                         const ad::Tensor& origins, const ad::Tensor& dirs,
                         const std::vector<std::vector<double>>& t_rows,
                         const std::vector<double>& t_far, bool want_feature);

// Deduplicates exactly-coincident merged samples (sorted input).
void separate_duplicates(std::vector<double>& t);

// Inference-time rendering: deterministic midpoint sampling, coarse pass to
// place the fine samples, fine pass for the output color.
class ModelRenderer {
 public:
  ModelRenderer(const Model& model, std::size_t n_coarse, std::size_t n_fine)
      : model_(model), n_coarse_(n_coarse), n_fine_(n_fine) {}

  harness::Image render_rays(const std::vector<field::Ray>& rays, std::size_t width,
                             std::size_t height, std::size_t chunk = 512) const;

  // Sharp view: original rays only.
  harness::Image render_sharp_view(const harness::CameraModel& cam,
                                   std::size_t chunk = 512) const;

  // Blurred prediction for a training view: composition-weighted sum of the
  // k+1 fine renders (the original render when the kernel is disabled).
  harness::Image render_composite_view(const harness::CameraModel& cam, std::size_t scene,
                                       std::size_t chunk = 512) const;

 private:
  const Model& model_;
  std::size_t n_coarse_;
  std::size_t n_fine_;
};

}  // namespace sharpnerf::train
