// End-to-end acceptance suite. Criteria 1-4 are fast oracle and invariant
// checks; criteria 5-8 synthesize the benchmark datasets and train the full
// model and its ablations to completion, so the whole binary takes a few
// hours of CPU time. Training outputs are cached in the workspace directory
// (SHARPNERF_ACCEPT_DIR, default ./acceptance_work) keyed by run name, so a
// re-run of the binary reuses finished trainings.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sharpnerf/cli/commands.hpp"
#include "sharpnerf/field/render.hpp"
#include "sharpnerf/field/sampling.hpp"
#include "sharpnerf/harness/metrics.hpp"
#include "sharpnerf/kernel/rigid_blur.hpp"
#include "sharpnerf/kernel/screw.hpp"
#include "sharpnerf/rng.hpp"
#include "sharpnerf/trainer/renderer.hpp"
#include "sharpnerf/trainer/schedule.hpp"
#include "sharpnerf/trainer/trainer.hpp"

using namespace sharpnerf;
namespace fs = std::filesystem;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[criterion %d] %s %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

fs::path workspace() {
  if (const char* env = std::getenv("SHARPNERF_ACCEPT_DIR")) return fs::path(env);
  return fs::path("acceptance_work");
}

// The frozen desk-scale benchmark configuration. Values were calibrated with
// a pilot run before the thresholds below were fixed.
cli::RunConfig bench_config(const std::string& blur) {
  cli::RunConfig cfg;
  cfg.scene = "two_spheres_box";
  cfg.blur = blur;
  cfg.motion_samples = 10;
  cfg.motion_rot_amp = 0.03;
  cfg.motion_trans_amp = 0.05;
  cfg.aperture_samples = 16;
  cfg.defocus_aperture = 0.05;
  cfg.defocus_focus_dist = 0.0;  // focus on the front sphere
  cfg.views_train = 5;
  cfg.views_test = 2;
  cfg.image_size = 64;
  cfg.focal = 140.0;
  cfg.cam_radius = 3.4;
  cfg.cam_height = 1.0;
  cfg.cam_arc = 1.0;
  cfg.t_near = 1.2;
  cfg.t_far = 6.8;
  cfg.render_samples = 256;
  cfg.k = 4;
  cfg.field_width = 64;
  cfg.field_depth = 4;
  cfg.field_feature_dim = 64;
  cfg.m_pos = 6;
  cfg.m_dir = 4;
  cfg.skip_layer = 2;
  cfg.latent_dim = 64;
  cfg.rbk_encoder_width = 64;
  cfg.rbk_encoder_depth = 4;
  cfg.rbk_decoder_hidden = 32;
  cfg.awp_embed_dim = 32;
  cfg.awp_cond_dim = 16;
  cfg.awp_corr_dim = 8;
  cfg.awp_hidden = 32;
  cfg.batch_rays = 32;
  cfg.n_coarse = 12;
  cfg.n_fine = 12;
  cfg.warmup_iters = 1200;
  cfg.total_iters = 20000;
  cfg.checkpoint_interval = 0;
  cfg.seed = 11;
  return cfg;
}

std::string ensure_dataset(const std::string& blur) {
  const fs::path dir = workspace() / ("ds_" + blur);
  if (!fs::exists(dir / "manifest.txt")) {
    cli::CommandFlags flags;
    flags.out = dir.string();
    cli::cmd_synth(bench_config(blur), flags);
  }
  return dir.string();
}

std::size_t checkpoint_iteration(const fs::path& ckpt) {
  std::ifstream in(ckpt / "train_state.txt");
  std::string key, value;
  while (in >> key >> std::ws && std::getline(in, value))
    if (key == "iteration") return std::stoull(value);
  return 0;
}

// Trains (or reuses) one run; returns the checkpoint directory.
std::string ensure_training(const std::string& name, const std::string& blur,
                            train::ModelKind kind, std::size_t iters) {
  const fs::path out = workspace() / name;
  const fs::path ckpt = out / "checkpoint_final";
  if (fs::exists(ckpt / "train_state.txt") && checkpoint_iteration(ckpt) == iters)
    return ckpt.string();
  fs::remove_all(out);

  cli::RunConfig cfg = bench_config(blur);
  cfg.dataset = ensure_dataset(blur);
  cli::CommandFlags flags;
  flags.out = out.string();
  flags.iters = iters;
  flags.disable_kernel = kind == train::ModelKind::kNaive;
  flags.disable_awp = kind == train::ModelKind::kKernelOnly;

  const auto t0 = std::chrono::steady_clock::now();
  cli::cmd_train(cfg, flags);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("  trained %s: %zu iterations in %.1f min\n", name.c_str(), iters, minutes);
  return ckpt.string();
}

struct EvalResult {
  double psnr = 0.0;
  double ssim = 0.0;
};

// Mean test-view quality of a checkpoint's sharp renders, at the precision of
// the float image container.
EvalResult eval_test_views(const std::string& ckpt, const std::string& dataset) {
  auto loaded = train::Trainer::load_model(ckpt);
  train::ModelRenderer renderer(*loaded.model, loaded.train_cfg.n_coarse,
                                loaded.train_cfg.n_fine);
  harness::Dataset ds = harness::Dataset::import_dir(dataset, harness::DatasetAccess::kTrainer);
  EvalResult r;
  std::size_t count = 0;
  for (const auto* view : ds.test_views()) {
    harness::Image img = renderer.render_sharp_view(view->cam);
    for (auto& v : img.rgb) v = static_cast<double>(static_cast<float>(v));
    r.psnr += harness::psnr(view->sharp, img);
    r.ssim += harness::ssim(view->sharp, img);
    ++count;
  }
  r.psnr /= static_cast<double>(count);
  r.ssim /= static_cast<double>(count);
  return r;
}

}  // namespace

TEST_CASE("criterion 1: closed forms against independent oracles") {
  bool pass = true;
  std::ostringstream detail;

  // 1a. Screw exponential vs the series, over theta in [0, pi], plus the
  // Taylor handoff at theta = 1e-6.
  {
    Rng rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Vec3 axis = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
      const double theta = rng.uniform(0.0, 3.14159265358979323846);
      kernel::ScrewAxis s{axis * theta,
                          {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
      auto t = kernel::screw_to_transform(s);
      Mat3 k = skew(s.r);
      worst = std::max(worst, oracles::max_abs_diff(t.rotation, oracles::expm_series(k)));
      Vec3 p = oracles::g_series(k) * s.v;
      worst = std::max(worst, norm(t.translation - p));
    }
    for (double theta : {1e-6 - 1e-9, 1e-6, 1e-6 + 1e-9}) {
      Vec3 axis = normalized(Vec3{0.3, -0.7, 0.64});
      kernel::ScrewAxis s{axis * theta, {0.2, -0.4, 0.1}};
      auto t = kernel::screw_to_transform(s);
      worst = std::max(worst, oracles::max_abs_diff(t.rotation, oracles::expm_series(skew(s.r))));
      worst = std::max(worst, norm(t.translation - oracles::g_series(skew(s.r)) * s.v));
      auto taylor = kernel::screw_to_transform(s, kernel::Branch::kTaylor);
      auto exact = kernel::screw_to_transform(s, kernel::Branch::kExact);
      worst = std::max(worst, oracles::max_abs_diff(taylor.rotation, exact.rotation));
      worst = std::max(worst, norm(taylor.translation - exact.translation));
    }
    pass = pass && worst < 1e-9;
    detail << "screw max err " << worst;
    CHECK(worst < 1e-9);
  }

  // 1b. Batched compositing vs the direct loop; conservation of ray mass.
  {
    Rng rng(2025);
    double worst = 0.0, worst_mass = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(8);
      std::vector<double> t(n);
      double acc = 0.1;
      for (auto& v : t) v = (acc += rng.uniform(0.01, 0.3));
      const double t_far = acc + rng.uniform(0.05, 0.4);
      std::vector<double> sigma(n);
      std::vector<Vec3> c(n);
      ad::Tensor sig = ad::Tensor::zeros({n});
      ad::Tensor rad = ad::Tensor::zeros({n, 3});
      for (std::size_t i = 0; i < n; ++i) {
        sigma[i] = rng.uniform(0.0, 5.0);
        sig.data()[i] = sigma[i];
        c[i] = {rng.uniform(), rng.uniform(), rng.uniform()};
        for (int ch = 0; ch < 3; ++ch) rad.data()[3 * i + ch] = c[i][ch];
      }
      auto got = field::volume_render(t, t_far, sig, rad);
      auto want = oracles::render_loop(t, t_far, sigma, c);
      double wsum = 0.0, od = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(got.weights.at(i) - want.w[i]));
        worst = std::max(worst, std::abs(got.transmittance.at(i) - want.T[i]));
        wsum += got.weights.at(i);
        od += sigma[i] * ((i + 1 < n ? t[i + 1] : t_far) - t[i]);
      }
      for (int ch = 0; ch < 3; ++ch)
        worst = std::max(worst, std::abs(got.color.at(ch) - want.color[ch]));
      worst_mass = std::max(worst_mass, std::abs(wsum + std::exp(-od) - 1.0));
    }
    pass = pass && worst < 1e-12 && worst_mass < 1e-9;
    detail << ", render err " << worst << ", mass err " << worst_mass;
    CHECK(worst < 1e-12);
    CHECK(worst_mass < 1e-9);
  }

  // 1c. Weight-module pieces vs literal transcriptions.
  {
    Rng rng(2026);
    awp::AwpConfig acfg;
    acfg.feature_dim = 6;
    acfg.embed_dim = 8;
    acfg.cond_dim = 8;
    acfg.corr_dim = 4;
    acfg.mam_hidden = 8;
    acfg.latent_dim = 8;
    acfg.m_dir = 1;
    awp::WeightProposal wp(acfg);
    ad::ParameterStore store;
    wp.init(store, rng);
    ad::BoundParams p(store, nullptr);
    double worst = 0.0;

    for (int trial = 0; trial < 20; ++trial) {
      // feature modulation vs the three-sample loop
      ad::Tensor zh = ad::Tensor::zeros({1, 2, 3, 2});
      ad::Tensor dl = ad::Tensor::zeros({1, 2, 3});
      for (std::size_t i = 0; i < zh.size(); ++i) zh.data()[i] = rng.uniform(0.0, 2.0);
      for (std::size_t i = 0; i < dl.size(); ++i) dl.data()[i] = rng.uniform(0.01, 0.5);
      ad::Tensor eta = awp::WeightProposal::feature_modulation(zh, dl);
      for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t ch = 0; ch < 2; ++ch) {
          double want = 0.0;
          for (std::size_t l = 0; l < 3; ++l) {
            double prefix = 0.0;
            for (std::size_t q = 0; q < l; ++q)
              prefix += dl.at(m * 3 + q) * zh.at((m * 3 + q) * 2 + ch);
            const double z = zh.at((m * 3 + l) * 2 + ch);
            want += std::exp(-prefix) * (1.0 - std::exp(-dl.at(m * 3 + l) * z)) * z;
          }
          worst = std::max(worst, std::abs(eta.at(m * 2 + ch) - want));
        }

      // aggregation block vs its step-by-step loop
      ad::Tensor zeta_hat = ad::Tensor::zeros({1, 2, 3, 8});
      ad::Tensor eta_hat = ad::Tensor::zeros({1, 2, 8});
      for (std::size_t i = 0; i < zeta_hat.size(); ++i) zeta_hat.data()[i] = rng.uniform(-1, 1);
      for (std::size_t i = 0; i < eta_hat.size(); ++i) eta_hat.data()[i] = rng.uniform(-1, 1);
      ad::Tensor agg = wp.aggregate(p, zeta_hat, eta_hat);
      auto want = oracles::mam_loop(store, acfg, zeta_hat, eta_hat);
      for (std::size_t i = 0; i < want.size(); ++i)
        worst = std::max(worst, std::abs(agg.at(i) - want[i]));

      // proposal head vs gap -> linear -> sigmoid -> normalize
      ad::Tensor et = ad::Tensor::zeros({1, 3, 8});
      for (std::size_t i = 0; i < et.size(); ++i) et.data()[i] = rng.uniform(-3, 3);
      ad::Tensor w = wp.propose_weights(p, et);
      const double fw = store.get("awp/final/w").at(0);
      const double fb = store.get("awp/final/b").at(0);
      double scores[3], total = 0.0;
      for (std::size_t m = 0; m < 3; ++m) {
        double gap = 0.0;
        for (std::size_t ch = 0; ch < 8; ++ch) gap += et.at(m * 8 + ch);
        gap /= 8.0;
        total += scores[m] = 1.0 / (1.0 + std::exp(-(gap * fw + fb)));
      }
      for (std::size_t m = 0; m < 3; ++m)
        worst = std::max(worst, std::abs(w.at(m) - scores[m] / total));

      // composition vs the dot product
      ad::Tensor colors = ad::Tensor::zeros({1, 3, 3});
      for (std::size_t i = 0; i < colors.size(); ++i) colors.data()[i] = rng.uniform();
      ad::Tensor composed = kernel::compose_colors(colors, w);
      for (int ch = 0; ch < 3; ++ch) {
        double want2 = 0.0;
        for (std::size_t m = 0; m < 3; ++m) want2 += w.at(m) * colors.at(m * 3 + ch);
        worst = std::max(worst, std::abs(composed.at(ch) - want2));
      }
    }
    pass = pass && worst < 1e-10;
    detail << ", weight-module err " << worst;
    CHECK(worst < 1e-10);
  }

  // 1d. Schedules.
  {
    const double l_start = train::lambda_schedule(1200, 1200, 20000, 0.9, 0.1);
    const double l_end = train::lambda_schedule(20000, 1200, 20000, 0.9, 0.1);
    const double l_mid = train::lambda_schedule(10600, 1200, 20000, 0.9, 0.1);
    const double r_start = train::lr_schedule(0, 20000, 5e-4, 8e-5);
    const double r_end = train::lr_schedule(20000, 20000, 5e-4, 8e-5);
    const bool ok = l_start == 0.9 && l_end == 0.1 && std::abs(l_mid - 0.3) < 1e-12 &&
                    r_start == 5e-4 && r_end == 8e-5;
    pass = pass && ok;
    detail << ", schedules " << (ok ? "exact" : "WRONG");
    CHECK(l_start == 0.9);
    CHECK(l_end == 0.1);
    CHECK(std::abs(l_mid - 0.3) < 1e-12);
    CHECK(r_start == 5e-4);
    CHECK(r_end == 8e-5);
  }

  report(1, pass, detail.str());
}

TEST_CASE("criterion 2: whole-objective gradient check") {
  const auto t0 = std::chrono::steady_clock::now();

  train::ModelConfig mc;
  mc.field.depth = 2;
  mc.field.width = 8;
  mc.field.feature_dim = 8;
  mc.field.m_pos = 4;
  mc.field.m_dir = 2;
  mc.field.skip_layer = 99;
  mc.rbk.k = 2;
  mc.rbk.n_images = 2;
  mc.rbk.latent_dim = 8;
  mc.rbk.encoder_width = 16;
  mc.rbk.decoder_hidden = 8;
  mc.awp_embed_dim = 8;
  mc.awp_cond_dim = 8;
  mc.awp_corr_dim = 4;
  mc.awp_hidden = 8;
  mc.kind = train::ModelKind::kFull;
  train::Model model(mc, 123);

  train::TrainConfig tc;
  tc.batch_rays = 2;
  tc.n_coarse = 4;
  tc.n_fine = 4;
  tc.warmup_iters = 10;
  tc.total_iters = 100;
  tc.seed = 31;

  train::TrainBatch batch;
  batch.view_index = 1;
  batch.t_near = 1.5;
  batch.t_far = 7.0;
  Rng rng(41);
  batch.origins = ad::Tensor({2, 3}, {0.0, 0.8, 3.8, 0.4, 0.9, 3.7});
  ad::Tensor dirs = ad::Tensor::zeros({2, 3});
  for (std::size_t r = 0; r < 2; ++r) {
    Vec3 d = normalized(Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.3, -0.1), -1.0});
    dirs.data()[r * 3] = d.x;
    dirs.data()[r * 3 + 1] = d.y;
    dirs.data()[r * 3 + 2] = d.z;
  }
  batch.dirs = dirs;
  batch.targets = ad::Tensor({2, 3}, {0.4, 0.3, 0.2, 0.1, 0.5, 0.6});
  batch.u_coarse.resize(2);
  batch.u_fine.resize(2);
  for (std::size_t r = 0; r < 2; ++r) {
    batch.u_coarse[r] = field::stratified_uniforms(4, rng);
    batch.u_fine[r] = field::stratified_uniforms(4, rng);
  }

  std::vector<std::vector<std::vector<double>>> fine_rows;
  {
    ad::BoundParams p(model.store, nullptr);
    train::compute_loss(model, tc, p, batch, 0.6, true, true, &fine_rows);
  }
  ad::Tensor flat = ad::flatten_store(model.store);
  const double err = ad::grad_check(
      [&](const ad::Tensor& x) {
        ad::BoundParams p = ad::bind_from_flat(model.store, x);
        return train::compute_loss(model, tc, p, batch, 0.6, true, true, &fine_rows);
      },
      flat, 1e-4);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = err < 1e-4 && seconds < 60.0;
  std::ostringstream detail;
  detail << "max rel err " << err << " over " << flat.size() << " parameters in " << seconds
         << " s";
  report(2, pass, detail.str());
  CHECK(err < 1e-4);
  CHECK(seconds < 60.0);
}

TEST_CASE("criterion 3: composition weights normalize across random parameterizations") {
  double worst_ccw = 0.0, worst_awp = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(9000 + trial);

    kernel::RigidBlurConfig kcfg;
    kcfg.k = 1 + rng.uniform_index(5);
    kcfg.n_images = 3;
    kcfg.latent_dim = 12;
    kcfg.encoder_width = 12;
    kcfg.decoder_hidden = 8;
    kernel::RigidBlurKernel rbk(kcfg);
    ad::ParameterStore kstore;
    rbk.init(kstore, rng);
    for (const auto& nm : kstore.names())
      for (std::size_t i = 0; i < kstore.get(nm).size(); ++i)
        kstore.get(nm).data()[i] = rng.uniform(-3.0, 3.0);
    ad::BoundParams kp(kstore, nullptr);
    auto heads = rbk.heads(kp, rng.uniform_index(3));
    double sum = 0.0;
    for (std::size_t i = 0; i < heads.weights.size(); ++i) sum += heads.weights.at(i);
    worst_ccw = std::max(worst_ccw, std::abs(sum - 1.0));

    awp::AwpConfig acfg;
    acfg.feature_dim = 5;
    acfg.embed_dim = 6;
    acfg.cond_dim = 6;
    acfg.corr_dim = 4;
    acfg.mam_hidden = 6;
    acfg.latent_dim = 6;
    acfg.m_dir = 1;
    awp::WeightProposal wp(acfg);
    ad::ParameterStore astore;
    wp.init(astore, rng);
    for (const auto& nm : astore.names())
      for (std::size_t i = 0; i < astore.get(nm).size(); ++i)
        astore.get(nm).data()[i] = rng.uniform(-3.0, 3.0);
    ad::BoundParams ap(astore, nullptr);
    ad::Tensor zeta = ad::Tensor::zeros({1, kcfg.k + 1, 3, 5});
    ad::Tensor delta = ad::Tensor::zeros({1, kcfg.k + 1, 3});
    ad::Tensor dirs = ad::Tensor::zeros({1, kcfg.k + 1, 3});
    ad::Tensor latent = ad::Tensor::zeros({1, 6});
    for (std::size_t i = 0; i < zeta.size(); ++i) zeta.data()[i] = rng.uniform(0.0, 1.0);
    for (std::size_t i = 0; i < delta.size(); ++i) delta.data()[i] = rng.uniform(0.01, 0.4);
    for (std::size_t i = 0; i < dirs.size(); ++i) dirs.data()[i] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < latent.size(); ++i) latent.data()[i] = rng.uniform(-1.0, 1.0);
    ad::Tensor w = wp.fine_weights(ap, zeta, delta, dirs, latent);
    double asum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) asum += w.at(i);
    worst_awp = std::max(worst_awp, std::abs(asum - 1.0));
  }
  const bool pass = worst_ccw < 1e-6 && worst_awp < 1e-6;
  std::ostringstream detail;
  detail << "worst |sum-1|: per-scene " << worst_ccw << ", per-pixel " << worst_awp;
  report(3, pass, detail.str());
  CHECK(worst_ccw < 1e-6);
  CHECK(worst_awp < 1e-6);
}

TEST_CASE("criterion 4: untrained checkpoints decode identity transforms") {
  const fs::path dir = workspace() / "identity_check";
  fs::remove_all(dir);

  cli::RunConfig cfg = bench_config("motion");
  cfg.dataset = ensure_dataset("motion");
  cli::CommandFlags tf;
  tf.out = (dir / "train").string();
  tf.iters = 0;
  cli::cmd_train(cfg, tf);

  cli::RunConfig icfg = cfg;
  icfg.checkpoint = (dir / "train" / "checkpoint_final").string();
  cli::CommandFlags inspect_flags;
  inspect_flags.out = (dir / "inspect").string();
  cli::cmd_inspect_kernel(icfg, inspect_flags);

  std::ifstream dump(dir / "inspect" / "kernel.txt");
  REQUIRE(dump);
  std::string tag;
  double worst = 0.0;
  int rows = 0;
  while (dump >> tag) {
    if (tag != "motion") {
      std::string rest;
      std::getline(dump, rest);
      continue;
    }
    ++rows;
    std::size_t s, q;
    double r[3], v[3], rot[9], p[3], w;
    dump >> s >> q >> r[0] >> r[1] >> r[2] >> v[0] >> v[1] >> v[2];
    for (auto& m : rot) dump >> m;
    dump >> p[0] >> p[1] >> p[2] >> w;
    for (int i = 0; i < 9; ++i)
      worst = std::max(worst, std::abs(rot[i] - (i % 4 == 0 ? 1.0 : 0.0)));
    for (double t : p) worst = std::max(worst, std::abs(t));
  }
  const bool pass = rows == 4 * 5 && worst < 1e-3;
  std::ostringstream detail;
  detail << rows << " motion rows, max deviation from identity " << worst;
  report(4, pass, detail.str());
  CHECK(rows == 4 * 5);
  CHECK(worst < 1e-3);
}

TEST_CASE("criterion 5: end-to-end deblurring gap on motion and defocus blur") {
  bool pass = true;
  std::ostringstream detail;
  for (const char* blur_name : {"motion", "defocus"}) {
    const std::string blur = blur_name;
    const std::string ds = ensure_dataset(blur);
    const std::string naive = ensure_training(blur + "_naive", blur, train::ModelKind::kNaive,
                                              20000);
    const std::string full = ensure_training(blur + "_full", blur, train::ModelKind::kFull,
                                             20000);
    EvalResult en = eval_test_views(naive, ds);
    EvalResult ef = eval_test_views(full, ds);
    const bool gap_ok = ef.psnr >= en.psnr + 1.0;
    const bool ssim_ok = ef.ssim > en.ssim;
    pass = pass && gap_ok && ssim_ok;
    detail << blur << ": full " << ef.psnr << " dB / " << ef.ssim << " vs naive " << en.psnr
           << " dB / " << en.ssim << " (gap " << ef.psnr - en.psnr << " dB); ";
    CHECK(ef.psnr >= en.psnr + 1.0);
    CHECK(ef.ssim > en.ssim);
  }
  report(5, pass, detail.str());
}

TEST_CASE("criterion 6: the trained kernel reproduces the blurred inputs") {
  bool pass = true;
  std::ostringstream detail;
  for (const char* blur_name : {"motion", "defocus"}) {
    const std::string blur = blur_name;
    const std::string ds = ensure_dataset(blur);
    const std::string full = ensure_training(blur + "_full", blur, train::ModelKind::kFull,
                                             20000);
    harness::Dataset dataset = harness::Dataset::import_dir(ds,
                                                            harness::DatasetAccess::kTrainer);
    train::Trainer trainer = train::Trainer::load_checkpoint(full, std::move(dataset));
    const double fit = trainer.train_blur_psnr();
    pass = pass && fit >= 30.0;
    detail << blur << " blur-fit " << fit << " dB; ";
    CHECK(fit >= 30.0);
  }
  report(6, pass, detail.str());
}

TEST_CASE("criterion 7: per-pixel weight refinement does not hurt") {
  const std::string ds = ensure_dataset("defocus");
  const std::string rbk_only = ensure_training("defocus_rbk_only", "defocus",
                                               train::ModelKind::kKernelOnly, 20000);
  const std::string full = ensure_training("defocus_full", "defocus", train::ModelKind::kFull,
                                           20000);
  EvalResult er = eval_test_views(rbk_only, ds);
  EvalResult ef = eval_test_views(full, ds);
  const bool pass = ef.psnr >= er.psnr - 0.1;
  std::ostringstream detail;
  detail << "kernel+refiner " << ef.psnr << " dB vs kernel-only " << er.psnr << " dB (delta "
         << ef.psnr - er.psnr << " dB"
         << (ef.psnr > er.psnr ? ", strict improvement" : "") << ")";
  report(7, pass, detail.str());
  CHECK(ef.psnr >= er.psnr - 0.1);
}

TEST_CASE("criterion 8: benchmark runs are bit-reproducible under a fixed seed") {
  bool pass = true;
  std::ostringstream detail;

  auto file_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  // Synthesis reproduces byte-identically.
  {
    const fs::path d1 = workspace() / "repro_ds1";
    const fs::path d2 = workspace() / "repro_ds2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    cli::CommandFlags f1, f2;
    f1.out = d1.string();
    f2.out = d2.string();
    cli::cmd_synth(bench_config("motion"), f1);
    cli::cmd_synth(bench_config("motion"), f2);
    const bool same = file_bytes(d1 / "view_0002.f32") == file_bytes(d2 / "view_0002.f32") &&
                      file_bytes(d1 / "manifest.txt") == file_bytes(d2 / "manifest.txt");
    pass = pass && same;
    detail << "synthesis " << (same ? "identical" : "DIVERGED");
    CHECK(same);
    fs::remove_all(d2);
  }

  // Training: two fresh prefixes of the benchmark run agree bit for bit in
  // both the loss sequence and the resulting checkpoint. Each iteration is a
  // pure function of (state, rng), so agreement at every prefix step extends
  // inductively to the full 20k-iteration runs of criteria 5-7.
  {
    cli::RunConfig cfg = bench_config("motion");
    cfg.dataset = ensure_dataset("motion");
    cfg.warmup_iters = 50;  // exercise the post-warmup path inside the prefix
    const fs::path t1 = workspace() / "repro_t1";
    const fs::path t2 = workspace() / "repro_t2";
    fs::remove_all(t1);
    fs::remove_all(t2);
    cli::CommandFlags f1, f2;
    f1.out = t1.string();
    f2.out = t2.string();
    f1.iters = 400;
    f2.iters = 400;
    cli::cmd_train(cfg, f1);
    cli::cmd_train(cfg, f2);

    auto losses = [](const fs::path& p) {
      std::ifstream in(p / "train_log.csv");
      std::string line;
      std::getline(in, line);
      std::vector<std::string> out;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        out.push_back(line.substr(c1 + 1, c2 - c1 - 1));
      }
      return out;
    };
    const bool loss_same = losses(t1) == losses(t2);
    const bool ckpt_same = file_bytes(t1 / "checkpoint_final" / "params.f64") ==
                           file_bytes(t2 / "checkpoint_final" / "params.f64");
    pass = pass && loss_same && ckpt_same;
    detail << "; 400-step training " << (loss_same && ckpt_same ? "identical" : "DIVERGED");
    CHECK(loss_same);
    CHECK(ckpt_same);
    fs::remove_all(t2);
  }

  report(8, pass, detail.str());
}
