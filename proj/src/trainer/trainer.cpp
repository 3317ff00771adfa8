#include "sharpnerf/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sharpnerf/field/sampling.hpp"
#include "sharpnerf/harness/metrics.hpp"
#include "sharpnerf/trainer/loss.hpp"
#include "sharpnerf/trainer/renderer.hpp"
#include "sharpnerf/trainer/schedule.hpp"

namespace sharpnerf::train {

namespace fs = std::filesystem;
using ad::Tensor;

void TrainConfig::validate() const {
  if (batch_rays == 0 || n_coarse == 0) throw std::runtime_error("TrainConfig: empty batch");
  if (!(lambda_end > 0.0) || !(lambda_end < lambda_start) || !(lambda_start <= 1.0))
    throw std::runtime_error("TrainConfig: need 0 < lambda_end < lambda_start <= 1");
  if (warmup_iters >= total_iters)
    throw std::runtime_error("TrainConfig: warmup must end before the final iteration");
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw std::runtime_error("TrainConfig: bad rates");
}

Trainer::Trainer(ModelConfig model_cfg, TrainConfig train_cfg, harness::Dataset dataset)
    : model_cfg_(model_cfg), cfg_(train_cfg), dataset_(std::move(dataset)), rng_(train_cfg.seed) {
  cfg_.validate();
  train_views_ = dataset_.train_views();
  if (train_views_.empty()) throw std::runtime_error("Trainer: dataset has no training views");
  for (const auto* v : train_views_)
    if (v->blurred.rgb.empty())
      throw std::runtime_error("Trainer: a training view has no blurred image");
  if (model_cfg_.use_kernel() && model_cfg_.rbk.n_images != train_views_.size())
    throw std::runtime_error("Trainer: latent table size " +
                             std::to_string(model_cfg_.rbk.n_images) + " != train view count " +
                             std::to_string(train_views_.size()));
  model_ = std::make_unique<Model>(model_cfg_, cfg_.seed);
}

ad::Tensor compute_loss(const Model& model, const TrainConfig& cfg,
                        const ad::BoundParams& params, const TrainBatch& batch, double lambda,
                        bool kernel_active, bool awp_active,
                        std::vector<std::vector<std::vector<double>>>* fine_rows_io,
                        ad::Tensor* fine_weights_out) {
  const std::size_t rays = batch.origins.shape()[0];

  // All k+1 motions run as one stacked ray batch (motion-major rows), so each
  // stage is a single wide pass through the network.
  kernel::KernelHeads heads;
  Tensor all_origins = batch.origins;
  Tensor all_dirs = batch.dirs;
  std::size_t motions = 1;
  if (kernel_active) {
    heads = model.rbk->heads(params, batch.view_index);
    std::vector<Tensor> o{batch.origins}, d{batch.dirs};
    for (const auto& tr : heads.transforms) {
      auto [to, td] = kernel::transform_rays(batch.origins, batch.dirs, tr);
      o.push_back(std::move(to));
      d.push_back(std::move(td));
    }
    motions = o.size();
    all_origins = ad::concat_axis(o, 0);
    all_dirs = ad::concat_axis(d, 0);
  }
  const std::size_t stacked = motions * rays;

  std::vector<std::vector<double>> t_coarse(rays);
  for (std::size_t r = 0; r < rays; ++r)
    t_coarse[r] = field::stratified_from_uniforms(batch.t_near, batch.t_far, batch.u_coarse[r]);
  std::vector<std::vector<double>> coarse_rows(stacked);
  for (std::size_t m = 0; m < motions; ++m)
    for (std::size_t r = 0; r < rays; ++r) coarse_rows[m * rays + r] = t_coarse[r];
  const std::vector<double> t_far(stacked, batch.t_far);

  FieldPass coarse =
      run_field_pass(model.coarse, params, all_origins, all_dirs, coarse_rows, t_far, false);
  Tensor coarse_stack =
      ad::permute(ad::reshape(coarse.tone_color, {motions, rays, 3}), {1, 0, 2});

  std::vector<std::vector<double>> fine_rows(stacked);
  if (fine_rows_io && !fine_rows_io->empty()) {
    fine_rows = (*fine_rows_io)[0];
  } else {
    for (std::size_t m = 0; m < motions; ++m)
      for (std::size_t r = 0; r < rays; ++r) {
        std::vector<double> extra =
            cfg.n_fine ? field::hierarchical_from_uniforms(coarse.weights[m * rays + r],
                                                           batch.t_near, batch.t_far,
                                                           batch.u_fine[r])
                       : std::vector<double>{};
        auto& row = fine_rows[m * rays + r];
        row = field::merge_sorted(t_coarse[r], extra);
        separate_duplicates(row);
      }
    if (fine_rows_io) fine_rows_io->push_back(fine_rows);
  }
  FieldPass fine =
      run_field_pass(model.fine, params, all_origins, all_dirs, fine_rows, t_far, awp_active);
  Tensor fine_stack = ad::permute(ad::reshape(fine.tone_color, {motions, rays, 3}), {1, 0, 2});

  Tensor composed_coarse, composed_fine;
  if (kernel_active) {
    composed_coarse = kernel::compose_colors(coarse_stack, heads.weights);
    composed_fine = kernel::compose_colors(fine_stack, heads.weights);
  } else {
    composed_coarse = ad::reshape(coarse_stack, {rays, 3});
    composed_fine = ad::reshape(fine_stack, {rays, 3});
  }

  if (awp_active) {
    const std::size_t ns = fine_rows[0].size();
    const std::size_t c1 = model.cfg.field.feature_dim;
    Tensor zeta = ad::permute(ad::reshape(fine.feature, {motions, rays, ns, c1}), {1, 0, 2, 3});
    Tensor delta = ad::permute(ad::reshape(fine.delta, {motions, rays, ns}), {1, 0, 2});
    Tensor dir_stack = ad::permute(ad::reshape(all_dirs, {motions, rays, 3}), {1, 0, 2});
    Tensor latent = model.rbk->latent(params, batch.view_index);
    Tensor fine_w = model.awp->fine_weights(params, zeta, delta, dir_stack, latent);
    if (fine_weights_out) *fine_weights_out = fine_w;
    Tensor refined = kernel::compose_colors(fine_stack, fine_w);
    return ad::add(ad::scale(mse(batch.targets, composed_coarse), lambda),
                   reconstruction_loss(batch.targets, composed_fine, refined, lambda));
  }
  return ad::add(mse(batch.targets, composed_coarse), mse(batch.targets, composed_fine));
}

std::vector<std::vector<double>> probe_fine_weights(
    const Model& model, const TrainConfig& cfg, const harness::CameraModel& cam,
    std::size_t scene, const std::vector<std::pair<std::size_t, std::size_t>>& pixels) {
  if (!model.cfg.use_awp())
    throw std::runtime_error("probe_fine_weights: the model has no weight-refinement module");
  const std::size_t rays = pixels.size();
  TrainBatch batch;
  batch.view_index = scene;
  batch.t_near = cam.t_near;
  batch.t_far = cam.t_far;
  batch.origins = Tensor::zeros({rays, 3});
  batch.dirs = Tensor::zeros({rays, 3});
  batch.targets = Tensor::zeros({rays, 3});
  for (std::size_t r = 0; r < rays; ++r) {
    const field::Ray ray = cam.pixel_ray(pixels[r].first, pixels[r].second);
    batch.origins.data()[r * 3] = ray.origin.x;
    batch.origins.data()[r * 3 + 1] = ray.origin.y;
    batch.origins.data()[r * 3 + 2] = ray.origin.z;
    batch.dirs.data()[r * 3] = ray.direction.x;
    batch.dirs.data()[r * 3 + 1] = ray.direction.y;
    batch.dirs.data()[r * 3 + 2] = ray.direction.z;
  }
  std::vector<double> uc(cfg.n_coarse), uf(cfg.n_fine);
  for (std::size_t i = 0; i < uc.size(); ++i)
    uc[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(uc.size());
  for (std::size_t i = 0; i < uf.size(); ++i)
    uf[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(uf.size());
  batch.u_coarse.assign(rays, uc);
  batch.u_fine.assign(rays, uf);

  ad::BoundParams params(model.store, nullptr);
  Tensor weights;
  compute_loss(model, cfg, params, batch, 0.5, true, true, nullptr, &weights);
  std::vector<std::vector<double>> out(rays);
  const std::size_t motions = weights.shape()[1];
  for (std::size_t r = 0; r < rays; ++r)
    out[r].assign(weights.data() + r * motions, weights.data() + (r + 1) * motions);
  return out;
}

StepResult Trainer::step() {
  const std::size_t e_c = iteration_;
  const std::size_t e_sched = std::min(e_c, cfg_.total_iters);
  const double lr = lr_schedule(e_sched, cfg_.total_iters, cfg_.lr_start, cfg_.lr_end);

  const bool kernel_active = model_cfg_.use_kernel() && e_c >= cfg_.warmup_iters;
  const bool awp_active = model_cfg_.use_awp() && kernel_active;
  double lambda = 1.0;
  if (awp_active)
    lambda = lambda_schedule(std::max(e_sched, cfg_.warmup_iters), cfg_.warmup_iters,
                             cfg_.total_iters, cfg_.lambda_start, cfg_.lambda_end);

  // One view per step; the rng consumption does not depend on the model
  // flags, so ablations see identical batches under the same seed.
  TrainBatch batch;
  batch.view_index = rng_.uniform_index(train_views_.size());
  const auto& view = *train_views_[batch.view_index];
  const auto& cam = view.cam;
  const std::size_t rays = cfg_.batch_rays;
  batch.t_near = cam.t_near;
  batch.t_far = cam.t_far;

  batch.origins = Tensor::zeros({rays, 3});
  batch.dirs = Tensor::zeros({rays, 3});
  batch.targets = Tensor::zeros({rays, 3});
  std::vector<std::pair<std::size_t, std::size_t>> pixels(rays);
  for (std::size_t r = 0; r < rays; ++r) {
    const std::size_t x = rng_.uniform_index(cam.width);
    const std::size_t y = rng_.uniform_index(cam.height);
    pixels[r] = {x, y};
    const field::Ray ray = cam.pixel_ray(x, y);
    batch.origins.data()[r * 3] = ray.origin.x;
    batch.origins.data()[r * 3 + 1] = ray.origin.y;
    batch.origins.data()[r * 3 + 2] = ray.origin.z;
    batch.dirs.data()[r * 3] = ray.direction.x;
    batch.dirs.data()[r * 3 + 1] = ray.direction.y;
    batch.dirs.data()[r * 3 + 2] = ray.direction.z;
    for (std::size_t c = 0; c < 3; ++c)
      batch.targets.data()[r * 3 + c] = view.blurred.at(x, y, c);
  }
  // The per-ray uniforms are shared by all k+1 motions of that ray.
  batch.u_coarse.resize(rays);
  batch.u_fine.resize(rays);
  for (std::size_t r = 0; r < rays; ++r)
    batch.u_coarse[r] = field::stratified_uniforms(cfg_.n_coarse, rng_);
  for (std::size_t r = 0; r < rays; ++r)
    batch.u_fine[r] = field::stratified_uniforms(cfg_.n_fine, rng_);

  ad::Tape tape;
  ad::BoundParams params(model_->store, &tape);
  Tensor total = compute_loss(*model_, cfg_, params, batch, lambda, kernel_active, awp_active);

  const double loss_value = total.item();
  if (!std::isfinite(loss_value)) {
    std::size_t bad = 0;
    for (std::size_t r = 0; r < rays; ++r)
      for (std::size_t c = 0; c < 3; ++c)
        if (!std::isfinite(batch.targets.at(r * 3 + c))) bad = r;
    std::ostringstream os;
    os << "non-finite loss at iteration " << e_c << ": view " << batch.view_index << ", pixel ("
       << pixels[bad].first << "," << pixels[bad].second << "), target ("
       << batch.targets.at(bad * 3) << "," << batch.targets.at(bad * 3 + 1) << ","
       << batch.targets.at(bad * 3 + 2) << ")";
    throw NumericError(os.str());
  }

  auto node_grads = tape.backward(total);
  std::unordered_map<std::string, Tensor> grads;
  for (const auto& name : model_->store.names()) {
    auto it = node_grads.find(params.node_of(name));
    if (it != node_grads.end()) grads.emplace(name, std::move(it->second));
  }
  adam_.step(model_->store, grads, lr);

  ++iteration_;
  return {e_c, loss_value, awp_active ? lambda : 1.0, lr};
}

harness::Image Trainer::render_sharp_view(const harness::CameraModel& cam,
                                          std::size_t chunk) const {
  return ModelRenderer(*model_, cfg_.n_coarse, cfg_.n_fine).render_sharp_view(cam, chunk);
}

harness::Image Trainer::render_composite_view(std::size_t train_view_index,
                                              std::size_t chunk) const {
  if (train_view_index >= train_views_.size())
    throw std::runtime_error("render_composite_view: bad view index");
  return ModelRenderer(*model_, cfg_.n_coarse, cfg_.n_fine)
      .render_composite_view(train_views_[train_view_index]->cam, train_view_index, chunk);
}

double Trainer::train_blur_psnr() const {
  double total = 0.0;
  for (std::size_t i = 0; i < train_views_.size(); ++i) {
    harness::Image composite = render_composite_view(i);
    total += harness::psnr(train_views_[i]->blurred, composite);
  }
  return total / static_cast<double>(train_views_.size());
}

// ---- checkpointing ----------------------------------------------------------------

namespace {

void write_kv(std::ostream& os, const std::string& key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << key << ' ' << buf << '\n';
}

struct KvReader {
  std::unordered_map<std::string, std::string> kv;

  explicit KvReader(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto sp = line.find(' ');
      if (sp == std::string::npos) throw std::runtime_error("checkpoint: malformed line " + line);
      kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
  }

  const std::string& str(const std::string& key) const {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("checkpoint: missing key " + key);
    return it->second;
  }
  double num(const std::string& key) const { return std::stod(str(key)); }
  std::size_t idx(const std::string& key) const {
    return static_cast<std::size_t>(std::stoull(str(key)));
  }
};

ModelConfig model_config_from(const KvReader& kv) {
  ModelConfig mc;
  mc.kind = model_kind_from_string(kv.str("model_kind"));
  mc.field.depth = kv.idx("field_depth");
  mc.field.width = kv.idx("field_width");
  mc.field.feature_dim = kv.idx("field_feature_dim");
  mc.field.m_pos = kv.idx("field_m_pos");
  mc.field.m_dir = kv.idx("field_m_dir");
  mc.field.skip_layer = kv.idx("field_skip_layer");
  mc.rbk.k = kv.idx("k");
  mc.rbk.n_images = kv.idx("n_images");
  mc.rbk.latent_dim = kv.idx("latent_dim");
  mc.rbk.encoder_width = kv.idx("rbk_encoder_width");
  mc.rbk.encoder_depth = kv.idx("rbk_encoder_depth");
  mc.rbk.decoder_hidden = kv.idx("rbk_decoder_hidden");
  mc.awp_embed_dim = kv.idx("awp_embed_dim");
  mc.awp_cond_dim = kv.idx("awp_cond_dim");
  mc.awp_corr_dim = kv.idx("awp_corr_dim");
  mc.awp_hidden = kv.idx("awp_hidden");
  return mc;
}

TrainConfig train_config_from(const KvReader& kv) {
  TrainConfig tc;
  tc.batch_rays = kv.idx("batch_rays");
  tc.n_coarse = kv.idx("n_coarse");
  tc.n_fine = kv.idx("n_fine");
  tc.lr_start = kv.num("lr_start");
  tc.lr_end = kv.num("lr_end");
  tc.lambda_start = kv.num("lambda_start");
  tc.lambda_end = kv.num("lambda_end");
  tc.warmup_iters = kv.idx("warmup_iters");
  tc.total_iters = kv.idx("total_iters");
  tc.seed = static_cast<std::uint64_t>(std::stoull(kv.str("seed")));
  return tc;
}

}  // namespace

void Trainer::save_checkpoint(const std::string& dir) const {
  fs::create_directories(dir);
  ad::save_store(model_->store, (fs::path(dir) / "params.manifest").string(),
                 (fs::path(dir) / "params.f64").string());
  ad::write_arrays((fs::path(dir) / "adam.manifest").string(),
                   (fs::path(dir) / "adam.f64").string(), adam_.moment_arrays());

  std::ofstream st(fs::path(dir) / "train_state.txt");
  if (!st) throw std::runtime_error("checkpoint: cannot write train_state.txt in " + dir);
  st << "model_kind " << to_string(model_cfg_.kind) << '\n';
  st << "field_depth " << model_cfg_.field.depth << '\n';
  st << "field_width " << model_cfg_.field.width << '\n';
  st << "field_feature_dim " << model_cfg_.field.feature_dim << '\n';
  st << "field_m_pos " << model_cfg_.field.m_pos << '\n';
  st << "field_m_dir " << model_cfg_.field.m_dir << '\n';
  st << "field_skip_layer " << model_cfg_.field.skip_layer << '\n';
  st << "k " << model_cfg_.rbk.k << '\n';
  st << "n_images " << model_cfg_.rbk.n_images << '\n';
  st << "latent_dim " << model_cfg_.rbk.latent_dim << '\n';
  st << "rbk_encoder_width " << model_cfg_.rbk.encoder_width << '\n';
  st << "rbk_encoder_depth " << model_cfg_.rbk.encoder_depth << '\n';
  st << "rbk_decoder_hidden " << model_cfg_.rbk.decoder_hidden << '\n';
  st << "awp_embed_dim " << model_cfg_.awp_embed_dim << '\n';
  st << "awp_cond_dim " << model_cfg_.awp_cond_dim << '\n';
  st << "awp_corr_dim " << model_cfg_.awp_corr_dim << '\n';
  st << "awp_hidden " << model_cfg_.awp_hidden << '\n';
  st << "batch_rays " << cfg_.batch_rays << '\n';
  st << "n_coarse " << cfg_.n_coarse << '\n';
  st << "n_fine " << cfg_.n_fine << '\n';
  write_kv(st, "lr_start", cfg_.lr_start);
  write_kv(st, "lr_end", cfg_.lr_end);
  write_kv(st, "lambda_start", cfg_.lambda_start);
  write_kv(st, "lambda_end", cfg_.lambda_end);
  st << "warmup_iters " << cfg_.warmup_iters << '\n';
  st << "total_iters " << cfg_.total_iters << '\n';
  st << "seed " << cfg_.seed << '\n';
  st << "iteration " << iteration_ << '\n';
  st << "adam_steps " << adam_.steps_taken() << '\n';
  st << "rng " << rng_.serialize() << '\n';
  if (!st) throw std::runtime_error("checkpoint: write failed");
}

Trainer Trainer::load_checkpoint(const std::string& dir, harness::Dataset dataset) {
  KvReader kv((fs::path(dir) / "train_state.txt").string());
  Trainer t(model_config_from(kv), train_config_from(kv), std::move(dataset));
  ad::load_store(t.model_->store, (fs::path(dir) / "params.manifest").string(),
                 (fs::path(dir) / "params.f64").string());
  auto moments = ad::read_arrays((fs::path(dir) / "adam.manifest").string(),
                                 (fs::path(dir) / "adam.f64").string());
  t.adam_.restore_moments(moments, kv.idx("adam_steps"));
  t.iteration_ = kv.idx("iteration");
  t.rng_ = Rng::deserialize(kv.str("rng"));
  return t;
}

Trainer::LoadedModel Trainer::load_model(const std::string& dir) {
  KvReader kv((fs::path(dir) / "train_state.txt").string());
  LoadedModel out{std::make_unique<Model>(model_config_from(kv), 0), train_config_from(kv)};
  ad::load_store(out.model->store, (fs::path(dir) / "params.manifest").string(),
                 (fs::path(dir) / "params.f64").string());
  return out;
}

}  // namespace sharpnerf::train
