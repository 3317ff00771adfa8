#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sharpnerf/harness/dataset.hpp"
#include "sharpnerf/rng.hpp"
#include "sharpnerf/trainer/adam.hpp"
#include "sharpnerf/trainer/model.hpp"

namespace sharpnerf::train {

struct TrainConfig {
  std::size_t batch_rays = 1024;
  std::size_t n_coarse = 64;
  std::size_t n_fine = 64;
  double lr_start = 5e-4;
  double lr_end = 8e-5;
  double lambda_start = 0.9;
  double lambda_end = 0.1;
  std::size_t warmup_iters = 1200;
  std::size_t total_iters = 20000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StepResult {
  std::size_t iteration = 0;  // the iteration that was just executed
  double loss = 0.0;
  double lambda = 1.0;
  double lr = 0.0;
};

// Raised when the optimization itself produces non-finite numbers.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One step's inputs: a pixel batch of a single view plus the pre-drawn
// sampling uniforms (shared by the k+1 motions of each ray).
struct TrainBatch {
  std::size_t view_index = 0;
  ad::Tensor origins;  // (R,3)
  ad::Tensor dirs;     // (R,3)
  ad::Tensor targets;  // (R,3)
  std::vector<std::vector<double>> u_coarse;
  std::vector<std::vector<double>> u_fine;
  double t_near = 0.0;
  double t_far = 1.0;
};

// The full differentiable training objective for one batch:
//   warmup / naive      MSE(B, C_coarse) + MSE(B, C_fine)
//   kernel, no refiner  MSE(B, Bc) + MSE(B, Bf)
//   full                lambda (MSE(B, Bc) + MSE(B, Bf)) + (1-lambda) MSE(B, Bt)
// where Bc/Bf are the per-scene-weight composites of the coarse/fine renders
// and Bt is the per-pixel refined composite.
//
// Fine sample placement follows the coarse weights but is not a gradient
// path. `fine_rows_io`, when given, pins it explicitly: filled on a first
// call, reused on later calls. Finite-difference checks need this so the
// sample positions stay fixed under parameter perturbation.
ad::Tensor compute_loss(const Model& model, const TrainConfig& cfg,
                        const ad::BoundParams& params, const TrainBatch& batch, double lambda,
                        bool kernel_active, bool awp_active,
                        std::vector<std::vector<std::vector<double>>>* fine_rows_io = nullptr,
                        ad::Tensor* fine_weights_out = nullptr);

// Refined per-pixel composition weights at chosen pixels of one training
// view, evaluated with deterministic midpoint sampling. Rows are (k+1) each.
std::vector<std::vector<double>> probe_fine_weights(
    const Model& model, const TrainConfig& cfg, const harness::CameraModel& cam,
    std::size_t scene, const std::vector<std::pair<std::size_t, std::size_t>>& pixels);

// Joint optimization of the radiance fields, the rigid blur kernel and the
// per-pixel weight module against blurred training views. Each step draws one
// view and a batch of its pixels; before `warmup_iters` only the original ray
// is rendered and regressed directly.
class Trainer {
 public:
  Trainer(ModelConfig model_cfg, TrainConfig train_cfg, harness::Dataset dataset);

  StepResult step();

  std::size_t iteration() const { return iteration_; }
  const Model& model() const { return *model_; }
  Model& model() { return *model_; }
  const TrainConfig& config() const { return cfg_; }
  const harness::Dataset& dataset() const { return dataset_; }
  std::size_t train_view_count() const { return train_views_.size(); }
  const harness::ViewRecord& train_view(std::size_t i) const { return *train_views_[i]; }

  // Deblurred render through the fine field, original rays only.
  harness::Image render_sharp_view(const harness::CameraModel& cam,
                                   std::size_t chunk = 512) const;

  // The model's blurred prediction for training view i: per-scene composition
  // weights over the k+1 fine renders (identity kernel when disabled).
  harness::Image render_composite_view(std::size_t train_view_index,
                                       std::size_t chunk = 512) const;

  // Mean PSNR of the composite prediction against the blurred inputs.
  double train_blur_psnr() const;

  void save_checkpoint(const std::string& dir) const;
  static Trainer load_checkpoint(const std::string& dir, harness::Dataset dataset);

  // Model-only load for rendering, evaluation and kernel inspection.
  struct LoadedModel {
    std::unique_ptr<Model> model;
    TrainConfig train_cfg;
  };
  static LoadedModel load_model(const std::string& dir);

 private:
  ModelConfig model_cfg_;
  TrainConfig cfg_;
  harness::Dataset dataset_;
  std::vector<const harness::ViewRecord*> train_views_;
  std::unique_ptr<Model> model_;
  Adam adam_;
  Rng rng_;
  std::size_t iteration_ = 0;
};

}  // namespace sharpnerf::train
