#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "sharpnerf/trainer/trainer.hpp"

namespace sharpnerf::cli {

// Operator mistakes: bad config keys or values, missing files. Exit code 1.
struct UserError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value run configuration. Every key is schema-checked; unknown keys
// are rejected. Defaults follow the reference training recipe.
struct RunConfig {
  // scene + synthesis
  std::string scene = "two_spheres_box";
  std::string blur = "motion";  // motion | defocus | none
  std::size_t motion_samples = 10;
  double motion_rot_amp = 0.012;
  double motion_trans_amp = 0.02;
  std::size_t aperture_samples = 16;
  double defocus_aperture = 0.05;
  double defocus_focus_dist = 0.0;  // 0 = focus on the scene's front feature
  std::size_t views_train = 5;
  std::size_t views_test = 2;
  std::size_t image_size = 64;
  double focal = 76.8;
  double cam_radius = 3.8;
  double cam_height = 1.0;
  double cam_arc = 1.0;
  double t_near = 1.5;
  double t_far = 7.0;
  std::size_t render_samples = 256;

  // model
  std::size_t k = 4;
  std::size_t field_width = 256;
  std::size_t field_depth = 8;
  std::size_t field_feature_dim = 128;
  std::size_t m_pos = 10;
  std::size_t m_dir = 4;
  std::size_t skip_layer = 4;
  std::size_t latent_dim = 64;
  std::size_t rbk_encoder_width = 64;
  std::size_t rbk_encoder_depth = 4;
  std::size_t rbk_decoder_hidden = 32;
  std::size_t awp_embed_dim = 64;
  std::size_t awp_cond_dim = 32;
  std::size_t awp_corr_dim = 16;
  std::size_t awp_hidden = 64;

  // optimization
  std::size_t batch_rays = 1024;
  std::size_t n_coarse = 64;
  std::size_t n_fine = 64;
  double lr_start = 5e-4;
  double lr_end = 8e-5;
  double lambda_start = 0.9;
  double lambda_end = 0.1;
  std::size_t warmup_iters = 1200;
  std::size_t total_iters = 20000;
  std::size_t checkpoint_interval = 5000;
  std::uint64_t seed = 0;

  // paths and command specifics
  std::string dataset;
  std::string checkpoint;
  std::string baseline_checkpoint;
  std::string poses;
  std::string eval_split = "test";  // test | train | all
  std::size_t spiral_frames = 30;
  double spiral_radius = 0.5;
  double spiral_turns = 2.0;
  double spiral_depth_osc = 0.2;
  std::size_t render_chunk = 512;

  train::TrainConfig train_config() const;
  train::ModelConfig model_config(train::ModelKind kind, std::size_t n_images) const;
};

RunConfig parse_config_file(const std::string& path);
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace sharpnerf::cli
