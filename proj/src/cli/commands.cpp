#include "sharpnerf/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sharpnerf/harness/dataset.hpp"
#include "sharpnerf/harness/metrics.hpp"
#include "sharpnerf/harness/presets.hpp"
#include "sharpnerf/harness/render.hpp"
#include "sharpnerf/trainer/renderer.hpp"
#include "sharpnerf/trainer/trainer.hpp"

namespace sharpnerf::cli {

namespace fs = std::filesystem;
using harness::CameraModel;
using harness::Dataset;
using harness::Image;

namespace {

std::string frame_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu%s", stem, i, ext);
  return buf;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

RunConfig with_overrides(RunConfig cfg, const CommandFlags& flags) {
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

Dataset open_dataset(const std::string& path, harness::DatasetAccess access) {
  if (path.empty()) throw UserError("no dataset given (config key 'dataset')");
  try {
    return Dataset::import_dir(path, access);
  } catch (const std::exception& e) {
    throw UserError(std::string("dataset: ") + e.what());
  }
}

train::Trainer::LoadedModel open_model(const std::string& path) {
  if (path.empty()) throw UserError("no checkpoint given (config key 'checkpoint')");
  try {
    return train::Trainer::load_model(path);
  } catch (const std::exception& e) {
    throw UserError(std::string("checkpoint: ") + e.what());
  }
}

void write_pose_manifest(const std::string& path, const std::vector<CameraModel>& cams) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto full = [&](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  out << "views " << cams.size() << '\n';
  out << "intrinsics ";
  full(cams[0].focal);
  out << ' ' << cams[0].width << ' ' << cams[0].height << ' ';
  full(cams[0].t_near);
  out << ' ';
  full(cams[0].t_far);
  out << '\n';
  for (std::size_t i = 0; i < cams.size(); ++i) {
    out << "view " << i << " test";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out << ' ';
        full(cams[i].rot(r, c));
      }
      out << ' ';
      full(cams[i].pos[r]);
    }
    out << '\n';
  }
}

double auto_focus_distance(const RunConfig& cfg, const CameraModel& cam) {
  if (cfg.defocus_focus_dist > 0.0) return cfg.defocus_focus_dist;
  if (cfg.scene == "two_spheres_box") return harness::two_spheres_box_front_depth(cam);
  return 0.5 * (cam.t_near + cam.t_far);
}

}  // namespace

void cmd_synth(const RunConfig& config, const CommandFlags& flags) {
  const RunConfig cfg = with_overrides(config, flags);
  const harness::ToyScene scene = harness::preset_scene(cfg.scene);
  const std::size_t total = cfg.views_train + cfg.views_test;
  if (cfg.views_train == 0) throw UserError("synth: need at least one training view");

  auto cams = harness::ring_cameras(total, cfg.cam_radius, cfg.cam_height, cfg.cam_arc,
                                    cfg.focal, cfg.image_size, cfg.image_size, cfg.t_near,
                                    cfg.t_far);

  // Spread the held-out poses evenly through the arc.
  std::vector<bool> is_test(total, false);
  for (std::size_t j = 0; j < cfg.views_test; ++j) {
    const std::size_t idx = static_cast<std::size_t>(
        (static_cast<double>(j) + 0.5) / static_cast<double>(cfg.views_test) *
        static_cast<double>(total));
    is_test[std::min(idx, total - 1)] = true;
  }
  if (static_cast<std::size_t>(std::count(is_test.begin(), is_test.end(), false)) !=
      cfg.views_train) {
    // Collisions are possible for odd splits; rebuild by simple suffix rule.
    std::fill(is_test.begin(), is_test.end(), false);
    for (std::size_t i = cfg.views_train; i < total; ++i) is_test[i] = true;
  }

  Rng rng(cfg.seed);
  std::ostringstream audit;
  audit << "blur " << cfg.blur << '\n';

  std::vector<harness::ViewRecord> views;
  for (std::size_t i = 0; i < total; ++i) {
    harness::ViewRecord v;
    v.cam = cams[i];
    v.is_test = is_test[i];
    v.sharp = harness::render_sharp(scene, cams[i], cfg.render_samples);

    if (cfg.blur == "motion") {
      harness::BlurSpec spec;
      spec.kind = harness::BlurSpec::Kind::kMotion;
      Rng view_rng = rng.split();
      spec.jitters = harness::motion_shake_path(cfg.motion_samples, cfg.motion_rot_amp,
                                                cfg.motion_trans_amp, view_rng);
      v.blurred = harness::synthesize_motion_blur(scene, cams[i], spec, cfg.render_samples);
      audit << "view " << i << " jitters";
      for (const auto& s : spec.jitters)
        audit << "  " << s.r.x << ' ' << s.r.y << ' ' << s.r.z << ' ' << s.v.x << ' ' << s.v.y
              << ' ' << s.v.z;
      audit << '\n';
    } else if (cfg.blur == "defocus") {
      harness::BlurSpec spec;
      spec.kind = harness::BlurSpec::Kind::kDefocus;
      spec.aperture_radius = cfg.defocus_aperture;
      spec.aperture_samples = cfg.aperture_samples;
      spec.focus_distance = auto_focus_distance(cfg, cams[i]);
      v.blurred = harness::synthesize_defocus_blur(scene, cams[i], spec, cfg.render_samples);
      audit << "view " << i << " aperture " << spec.aperture_radius << " focus "
            << spec.focus_distance << " samples " << spec.aperture_samples << '\n';
    } else {
      v.blurred = v.sharp;
    }
    views.push_back(std::move(v));
  }

  try {
    Dataset::export_dir(flags.out, views, audit.str());
  } catch (const std::exception& e) {
    throw UserError(std::string("synth: ") + e.what());
  }

  for (std::size_t i = 0; i < views.size(); ++i) {
    double mean_abs = 0.0;
    for (std::size_t j = 0; j < views[i].sharp.rgb.size(); ++j)
      mean_abs += std::abs(views[i].blurred.rgb[j] - views[i].sharp.rgb[j]);
    mean_abs /= static_cast<double>(views[i].sharp.rgb.size());
    std::cout << "view " << i << (views[i].is_test ? " (test) " : " (train) ")
              << "blur magnitude " << fmt(mean_abs) << '\n';
  }
  std::cout << "wrote " << views.size() << " views to " << flags.out << '\n';
}

void cmd_train(const RunConfig& config, const CommandFlags& flags) {
  const RunConfig cfg = with_overrides(config, flags);
  Dataset dataset = open_dataset(cfg.dataset, harness::DatasetAccess::kTrainer);
  const std::size_t n_train = dataset.train_views().size();

  train::ModelKind kind = train::ModelKind::kFull;
  if (flags.disable_kernel) kind = train::ModelKind::kNaive;
  else if (flags.disable_awp) kind = train::ModelKind::kKernelOnly;

  train::Trainer trainer(cfg.model_config(kind, n_train), cfg.train_config(),
                         std::move(dataset));

  fs::create_directories(flags.out);
  std::ofstream log(fs::path(flags.out) / "train_log.csv");
  if (!log) throw UserError("train: cannot write log in " + flags.out);
  log << "iteration,loss,lambda,lr,wall_ms\n";

  const std::size_t steps = flags.iters ? *flags.iters : cfg.total_iters;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const train::StepResult r = trainer.step();
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    char line[160];
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g,%.3f\n", r.iteration, r.loss,
                  r.lambda, r.lr, ms);
    log << line;
    if (cfg.checkpoint_interval > 0 && trainer.iteration() % cfg.checkpoint_interval == 0 &&
        trainer.iteration() < steps) {
      trainer.save_checkpoint(
          (fs::path(flags.out) / ("checkpoint_" + std::to_string(trainer.iteration()))).string());
    }
    if (trainer.iteration() % 500 == 0)
      std::cout << "iter " << trainer.iteration() << " loss " << fmt(r.loss) << '\n';
  }
  trainer.save_checkpoint((fs::path(flags.out) / "checkpoint_final").string());

  const double fit = trainer.train_blur_psnr();
  log << "# train_blur_psnr " << fmt(fit) << '\n';
  std::cout << "train-view blurred-reconstruction PSNR: " << fmt(fit) << '\n';
}

void cmd_render(const RunConfig& config, const CommandFlags& flags) {
  const RunConfig cfg = with_overrides(config, flags);
  auto loaded = open_model(cfg.checkpoint);
  train::ModelRenderer renderer(*loaded.model, loaded.train_cfg.n_coarse,
                                loaded.train_cfg.n_fine);

  std::vector<CameraModel> cams;
  if (!cfg.poses.empty()) {
    try {
      cams = Dataset::read_poses(cfg.poses);
    } catch (const std::exception& e) {
      throw UserError(std::string("poses: ") + e.what());
    }
  } else {
    // Spiral around the mean training pose.
    std::vector<CameraModel> base;
    try {
      base = Dataset::read_poses(cfg.dataset);
    } catch (const std::exception& e) {
      throw UserError(std::string("render: spiral path needs a dataset: ") + e.what());
    }
    Vec3 center{0, 0, 0}, fwd{0, 0, 0}, up{0, 0, 0};
    for (const auto& c : base) {
      center += c.pos;
      fwd += c.forward();
      up += c.up();
    }
    center = center / static_cast<double>(base.size());
    fwd = normalized(fwd);
    up = normalized(up);
    const Vec3 right = normalized(cross(fwd, up));
    const double depth = 0.5 * (base[0].t_near + base[0].t_far);
    const Vec3 target = center + fwd * depth;
    for (std::size_t i = 0; i < cfg.spiral_frames; ++i) {
      const double phi = 2.0 * 3.14159265358979323846 * cfg.spiral_turns *
                         static_cast<double>(i) / static_cast<double>(cfg.spiral_frames);
      const Vec3 eye = center + right * (cfg.spiral_radius * std::cos(phi)) +
                       up * (cfg.spiral_radius * std::sin(phi)) +
                       fwd * (cfg.spiral_depth_osc * std::sin(2.0 * phi));
      cams.push_back(harness::look_at(eye, target, up, base[0].focal, base[0].width,
                                      base[0].height, base[0].t_near, base[0].t_far));
    }
  }
  if (cams.empty()) throw UserError("render: no poses to render");

  fs::create_directories(flags.out);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    Image img = renderer.render_sharp_view(cams[i], cfg.render_chunk);
    harness::write_f32(img, (fs::path(flags.out) / frame_name("frame", i, ".f32")).string());
    harness::write_ppm(img, (fs::path(flags.out) / frame_name("frame", i, ".ppm")).string());
  }
  write_pose_manifest((fs::path(flags.out) / "manifest.txt").string(), cams);
  std::cout << "rendered " << cams.size() << " frames to " << flags.out << '\n';
}

void cmd_eval(const RunConfig& config, const CommandFlags& flags) {
  const RunConfig cfg = with_overrides(config, flags);
  const std::string ckpt =
      flags.baseline_naive && !cfg.baseline_checkpoint.empty() ? cfg.baseline_checkpoint
                                                               : cfg.checkpoint;
  auto loaded = open_model(ckpt);
  train::ModelRenderer renderer(*loaded.model, loaded.train_cfg.n_coarse,
                                loaded.train_cfg.n_fine);
  Dataset dataset = open_dataset(cfg.dataset, harness::DatasetAccess::kTrainer);

  std::vector<std::pair<std::size_t, const harness::ViewRecord*>> chosen;
  for (std::size_t i = 0; i < dataset.views().size(); ++i) {
    const auto& v = dataset.views()[i];
    if (cfg.eval_split == "all" || (cfg.eval_split == "test" && v.is_test) ||
        (cfg.eval_split == "train" && !v.is_test))
      chosen.emplace_back(i, &v);
  }
  if (chosen.empty()) throw UserError("eval: no views in split '" + cfg.eval_split + "'");

  fs::create_directories(flags.out);
  std::ofstream csv(fs::path(flags.out) / "eval.csv");
  if (!csv) throw UserError("eval: cannot write report in " + flags.out);
  csv << "view,role,psnr,ssim,mean_mse\n";

  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& [idx, view] : chosen) {
    Image rendered = renderer.render_sharp_view(view->cam, cfg.render_chunk);
    // Metrics run at the precision of the float container, like the stored
    // ground truth they are compared against.
    for (auto& v : rendered.rgb) v = static_cast<double>(static_cast<float>(v));
    harness::write_f32(rendered,
                       (fs::path(flags.out) / frame_name("render", idx, ".f32")).string());
    harness::write_ppm(rendered,
                       (fs::path(flags.out) / frame_name("render", idx, ".ppm")).string());
    const double p = harness::psnr(view->sharp, rendered);
    const double s = harness::ssim(view->sharp, rendered);
    harness::ErrorMap em = harness::error_map(view->sharp, rendered);
    harness::write_ppm(em.map, (fs::path(flags.out) / frame_name("error", idx, ".ppm")).string());
    harness::write_f32(em.map, (fs::path(flags.out) / frame_name("error", idx, ".f32")).string());
    csv << idx << ',' << (view->is_test ? "test" : "train") << ',' << fmt(p) << ',' << fmt(s)
        << ',' << fmt(em.mean_mse) << '\n';
    psnr_sum += p;
    ssim_sum += s;
  }
  const double n = static_cast<double>(chosen.size());
  csv << "mean,," << fmt(psnr_sum / n) << ',' << fmt(ssim_sum / n) << ",\n";
  std::cout << "eval " << chosen.size() << " views: mean PSNR " << fmt(psnr_sum / n)
            << ", mean SSIM " << fmt(ssim_sum / n) << '\n';
}

void cmd_inspect_kernel(const RunConfig& config, const CommandFlags& flags) {
  const RunConfig cfg = with_overrides(config, flags);
  auto loaded = open_model(cfg.checkpoint);
  const train::Model& model = *loaded.model;
  if (!model.cfg.use_kernel())
    throw UserError("inspect-kernel: this checkpoint has no kernel parameters");

  fs::create_directories(flags.out);
  std::ofstream out(fs::path(flags.out) / "kernel.txt");
  if (!out) throw UserError("inspect-kernel: cannot write in " + flags.out);
  auto full = [&](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ' ' << buf;
  };

  // Per-pixel weights are probed on a 3x3 grid when the refiner and a
  // dataset (for cameras) are available.
  std::vector<Dataset::PoseRecord> poses;
  if (!cfg.dataset.empty()) {
    try {
      poses = Dataset::read_pose_records(cfg.dataset);
    } catch (const std::exception& e) {
      throw UserError(std::string("inspect-kernel: ") + e.what());
    }
  }
  std::vector<CameraModel> train_cams;
  for (const auto& rec : poses)
    if (!rec.is_test) train_cams.push_back(rec.cam);

  const std::size_t scenes = model.cfg.rbk.n_images;
  for (std::size_t s = 0; s < scenes; ++s) {
    auto [records, weights] = model.rbk->export_motions(model.store, s);
    for (const auto& rec : records) {
      out << "motion " << s << ' ' << rec.motion;
      full(rec.screw.r.x);
      full(rec.screw.r.y);
      full(rec.screw.r.z);
      full(rec.screw.v.x);
      full(rec.screw.v.y);
      full(rec.screw.v.z);
      for (double m : rec.transform.rotation.m) full(m);
      full(rec.transform.translation.x);
      full(rec.transform.translation.y);
      full(rec.transform.translation.z);
      full(rec.weight);
      out << '\n';
    }
    out << "ccw " << s;
    for (double w : weights) full(w);
    out << '\n';

    if (model.cfg.use_awp() && s < train_cams.size()) {
      const CameraModel& cam = train_cams[s];
      std::vector<std::pair<std::size_t, std::size_t>> pixels;
      for (int gy = 0; gy < 3; ++gy)
        for (int gx = 0; gx < 3; ++gx)
          pixels.emplace_back(cam.width * (2 * gx + 1) / 6, cam.height * (2 * gy + 1) / 6);
      auto rows = train::probe_fine_weights(model, loaded.train_cfg, cam, s, pixels);
      for (std::size_t i = 0; i < pixels.size(); ++i) {
        out << "awp " << s << ' ' << pixels[i].first << ' ' << pixels[i].second;
        for (double w : rows[i]) full(w);
        out << '\n';
      }
    }
  }

  // Diagnostic: how large the learned motions are, next to the generating
  // parameters when the audit block is available.
  double max_screw = 0.0;
  for (std::size_t s = 0; s < scenes; ++s) {
    auto [records, weights] = model.rbk->export_motions(model.store, s);
    (void)weights;
    for (const auto& rec : records)
      max_screw = std::max(max_screw, std::max(norm(rec.screw.r), norm(rec.screw.v)));
  }
  std::cout << "largest learned screw magnitude: " << max_screw << '\n';
  if (!cfg.dataset.empty()) {
    try {
      Dataset audit = Dataset::import_dir(cfg.dataset, harness::DatasetAccess::kAudit);
      std::istringstream is(audit.blur_audit());
      std::string first;
      std::getline(is, first);
      std::cout << "dataset blur audit: " << first << '\n';
    } catch (const std::exception&) {
      // no dataset images next to the poses; the dump above still stands
    }
  }
  std::cout << "wrote kernel dump for " << scenes << " scenes to " << flags.out << '\n';
}

int run_command(const std::string& command, const RunConfig& cfg, const CommandFlags& flags) {
  try {
    if (command == "synth") cmd_synth(cfg, flags);
    else if (command == "train") cmd_train(cfg, flags);
    else if (command == "render") cmd_render(cfg, flags);
    else if (command == "eval") cmd_eval(cfg, flags);
    else if (command == "inspect-kernel") cmd_inspect_kernel(cfg, flags);
    else throw UserError("unknown command: " + command);
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const train::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace sharpnerf::cli
