#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sharpnerf/cli/commands.hpp"
#include "sharpnerf/harness/dataset.hpp"
#include "sharpnerf/trainer/renderer.hpp"
#include "sharpnerf/trainer/trainer.hpp"

using namespace sharpnerf;
using namespace sharpnerf::cli;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.scene = "two_spheres_box";
  cfg.blur = "motion";
  cfg.motion_samples = 4;
  cfg.motion_rot_amp = 0.02;
  cfg.motion_trans_amp = 0.03;
  cfg.views_train = 3;
  cfg.views_test = 1;
  cfg.image_size = 16;
  cfg.focal = 19.2;
  cfg.render_samples = 48;
  cfg.k = 2;
  cfg.field_width = 12;
  cfg.field_depth = 2;
  cfg.field_feature_dim = 12;
  cfg.m_pos = 3;
  cfg.m_dir = 1;
  cfg.skip_layer = 9;
  cfg.latent_dim = 8;
  cfg.rbk_encoder_width = 12;
  cfg.rbk_encoder_depth = 2;
  cfg.rbk_decoder_hidden = 6;
  cfg.awp_embed_dim = 8;
  cfg.awp_cond_dim = 6;
  cfg.awp_corr_dim = 4;
  cfg.awp_hidden = 8;
  cfg.batch_rays = 8;
  cfg.n_coarse = 5;
  cfg.n_fine = 5;
  cfg.warmup_iters = 4;
  cfg.total_iters = 40;
  cfg.checkpoint_interval = 0;
  cfg.seed = 3;
  cfg.render_chunk = 128;
  return cfg;
}

}  // namespace

TEST_CASE("config files: parsing and schema") {
  TempDir dir("sharpnerf_cli_cfg");
  {
    std::ofstream out(dir.str("ok.cfg"));
    out << "# comment\n"
        << "scene = single_sphere\n"
        << "image_size = 24\n"
        << "lr_start = 1e-3\n";
  }
  RunConfig cfg = parse_config_file(dir.str("ok.cfg"));
  CHECK(cfg.scene == "single_sphere");
  CHECK(cfg.image_size == 24);
  CHECK(cfg.lr_start == 1e-3);

  {
    std::ofstream out(dir.str("bad_key.cfg"));
    out << "not_a_real_key = 5\n";
  }
  CHECK_THROWS_WITH_AS(parse_config_file(dir.str("bad_key.cfg")),
                       doctest::Contains("unknown key"), UserError);

  {
    std::ofstream out(dir.str("bad_value.cfg"));
    out << "image_size = often\n";
  }
  CHECK_THROWS_AS(parse_config_file(dir.str("bad_value.cfg")), UserError);

  {
    std::ofstream out(dir.str("bad_enum.cfg"));
    out << "blur = heavy\n";
  }
  CHECK_THROWS_AS(parse_config_file(dir.str("bad_enum.cfg")), UserError);

  CHECK_THROWS_AS(parse_config_file(dir.str("missing.cfg")), UserError);
}

TEST_CASE("synth: counts, determinism, pinhole degeneracy") {
  TempDir dir("sharpnerf_cli_synth");
  RunConfig cfg = tiny_config();
  cfg.views_train = 5;
  cfg.views_test = 0;
  cfg.seed = 7;

  CommandFlags flags;
  flags.out = dir.str("ds");
  cmd_synth(cfg, flags);
  for (int i = 0; i < 5; ++i) {
    CHECK(fs::exists(dir.path / "ds" / ("view_000" + std::to_string(i) + ".f32")));
    CHECK(fs::exists(dir.path / "ds" / ("sharp_000" + std::to_string(i) + ".f32")));
  }
  CHECK(fs::exists(dir.path / "ds" / "manifest.txt"));

  // Same seed, same bytes.
  flags.out = dir.str("ds2");
  cmd_synth(cfg, flags);
  CHECK(slurp(dir.str("ds/view_0003.f32")) == slurp(dir.str("ds2/view_0003.f32")));
  CHECK(slurp(dir.str("ds/manifest.txt")) == slurp(dir.str("ds2/manifest.txt")));

  // Zero-aperture defocus reproduces the sharp images byte for byte.
  cfg.blur = "defocus";
  cfg.defocus_aperture = 0.0;
  cfg.defocus_focus_dist = 3.0;
  flags.out = dir.str("ds3");
  cmd_synth(cfg, flags);
  CHECK(slurp(dir.str("ds3/view_0002.f32")) == slurp(dir.str("ds3/sharp_0002.f32")));
}

TEST_CASE("train, render, eval, inspect round trip") {
  TempDir dir("sharpnerf_cli_roundtrip");
  RunConfig cfg = tiny_config();

  CommandFlags synth_flags;
  synth_flags.out = dir.str("ds");
  cmd_synth(cfg, synth_flags);
  cfg.dataset = dir.str("ds");

  SUBCASE("--iters 0 checkpoints the initialized model; transforms start at identity") {
    CommandFlags flags;
    flags.out = dir.str("init");
    flags.iters = 0;
    cmd_train(cfg, flags);
    CHECK(fs::exists(dir.path / "init" / "checkpoint_final" / "params.f64"));

    RunConfig icfg = cfg;
    icfg.checkpoint = dir.str("init/checkpoint_final");
    CommandFlags iflags;
    iflags.out = dir.str("inspect");
    cmd_inspect_kernel(icfg, iflags);

    std::ifstream dump(dir.str("inspect/kernel.txt"));
    REQUIRE(dump);
    std::string tag;
    int motion_rows = 0;
    while (dump >> tag) {
      if (tag == "motion") {
        ++motion_rows;
        std::size_t s, q;
        double r[3], v[3], rot[9], p[3], w;
        dump >> s >> q >> r[0] >> r[1] >> r[2] >> v[0] >> v[1] >> v[2];
        for (auto& m : rot) dump >> m;
        dump >> p[0] >> p[1] >> p[2] >> w;
        for (int i = 0; i < 9; ++i)
          CHECK(std::abs(rot[i] - (i % 4 == 0 ? 1.0 : 0.0)) < 1e-3);
        CHECK(std::abs(p[0]) < 1e-3);
        CHECK(std::abs(p[1]) < 1e-3);
        CHECK(std::abs(p[2]) < 1e-3);
      } else {
        std::string rest;
        std::getline(dump, rest);
      }
    }
    CHECK(motion_rows == 2 * 3);  // k rows per training view
  }

  SUBCASE("training is deterministic and rendering reproducible") {
    CommandFlags f1;
    f1.out = dir.str("t1");
    f1.iters = 12;
    cmd_train(cfg, f1);
    CommandFlags f2;
    f2.out = dir.str("t2");
    f2.iters = 12;
    cmd_train(cfg, f2);
    CHECK(slurp(dir.str("t1/checkpoint_final/params.f64")) ==
          slurp(dir.str("t2/checkpoint_final/params.f64")));

    RunConfig rcfg = cfg;
    rcfg.checkpoint = dir.str("t1/checkpoint_final");
    rcfg.spiral_frames = 4;
    CommandFlags r1;
    r1.out = dir.str("r1");
    cmd_render(rcfg, r1);
    CommandFlags r2;
    r2.out = dir.str("r2");
    cmd_render(rcfg, r2);
    for (int i = 0; i < 4; ++i) {
      const std::string name = "frame_000" + std::to_string(i) + ".f32";
      CHECK(fs::exists(dir.path / "r1" / name));
      CHECK(slurp(dir.str("r1/" + name)) == slurp(dir.str("r2/" + name)));
    }

    // Rendering from a poses file hits the same path.
    RunConfig pcfg = rcfg;
    pcfg.poses = dir.str("ds/manifest.txt");
    CommandFlags rp;
    rp.out = dir.str("rp");
    cmd_render(pcfg, rp);
    CHECK(fs::exists(dir.path / "rp" / "frame_0003.f32"));
  }

  SUBCASE("eval reports one row per view plus the mean") {
    CommandFlags tf;
    tf.out = dir.str("t3");
    tf.iters = 6;
    cmd_train(cfg, tf);

    RunConfig ecfg = cfg;
    ecfg.checkpoint = dir.str("t3/checkpoint_final");
    ecfg.eval_split = "all";
    CommandFlags ef;
    ef.out = dir.str("e3");
    cmd_eval(ecfg, ef);

    std::ifstream csv(dir.str("e3/eval.csv"));
    REQUIRE(csv);
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 1 + 4 + 1);  // header + all views + mean
    CHECK(fs::exists(dir.path / "e3" / "error_0000.ppm"));
  }

  SUBCASE("a model that reproduces ground truth scores inf PSNR and unit SSIM") {
    CommandFlags tf;
    tf.out = dir.str("t4");
    tf.iters = 2;
    cmd_train(cfg, tf);

    // Build a dataset whose "ground truth" is the model's own render.
    auto loaded = train::Trainer::load_model(dir.str("t4/checkpoint_final"));
    train::ModelRenderer renderer(*loaded.model, loaded.train_cfg.n_coarse,
                                  loaded.train_cfg.n_fine);
    harness::Dataset src = harness::Dataset::import_dir(dir.str("ds"),
                                                        harness::DatasetAccess::kTrainer);
    std::vector<harness::ViewRecord> views;
    for (const auto& v : src.views()) {
      harness::ViewRecord copy = v;
      copy.sharp = renderer.render_sharp_view(v.cam, 128);
      views.push_back(std::move(copy));
    }
    harness::Dataset::export_dir(dir.str("ds_self"), views, "");

    RunConfig ecfg = cfg;
    ecfg.checkpoint = dir.str("t4/checkpoint_final");
    ecfg.dataset = dir.str("ds_self");
    ecfg.eval_split = "all";
    CommandFlags ef;
    ef.out = dir.str("e4");
    cmd_eval(ecfg, ef);

    std::ifstream csv(dir.str("e4/eval.csv"));
    std::string line;
    std::getline(csv, line);  // header
    int inf_rows = 0;
    while (std::getline(csv, line)) {
      if (line.rfind("mean", 0) == 0) continue;
      // view,role,psnr,ssim,mean_mse -- ground truth was stored at f32
      // precision, so the render matches it exactly.
      if (line.find(",inf,1.000000,") != std::string::npos) ++inf_rows;
    }
    CHECK(inf_rows == 4);
  }
}

TEST_CASE("exit codes") {
  TempDir dir("sharpnerf_cli_exit");
  RunConfig cfg = tiny_config();
  CommandFlags flags;
  flags.out = dir.str("out");

  // Missing dataset: user error.
  cfg.dataset = dir.str("nope");
  CHECK(run_command("train", cfg, flags) == 1);
  CHECK(run_command("bogus", cfg, flags) == 1);

  // Missing checkpoint for render/eval/inspect.
  RunConfig rcfg = tiny_config();
  rcfg.checkpoint = dir.str("missing_ckpt");
  CHECK(run_command("render", rcfg, flags) == 1);
  CHECK(run_command("eval", rcfg, flags) == 1);
  CHECK(run_command("inspect-kernel", rcfg, flags) == 1);

  // A healthy pipeline returns 0.
  RunConfig ok = tiny_config();
  CommandFlags sf;
  sf.out = dir.str("ds");
  CHECK(run_command("synth", ok, sf) == 0);
  ok.dataset = dir.str("ds");
  CommandFlags tf;
  tf.out = dir.str("t");
  tf.iters = 2;
  CHECK(run_command("train", ok, tf) == 0);

  // Naive checkpoints have no kernel to inspect.
  CommandFlags nf;
  nf.out = dir.str("tn");
  nf.iters = 2;
  nf.disable_kernel = true;
  CHECK(run_command("train", ok, nf) == 0);
  RunConfig icfg = ok;
  icfg.checkpoint = dir.str("tn/checkpoint_final");
  CommandFlags inf_flags;
  inf_flags.out = dir.str("i");
  CHECK(run_command("inspect-kernel", icfg, inf_flags) == 1);

  // --baseline naive redirects evaluation to the baseline checkpoint.
  RunConfig bcfg = ok;
  bcfg.checkpoint = dir.str("does_not_exist");
  bcfg.baseline_checkpoint = dir.str("tn/checkpoint_final");
  bcfg.eval_split = "all";
  CommandFlags bflags;
  bflags.out = dir.str("eb");
  bflags.baseline_naive = true;
  CHECK(run_command("eval", bcfg, bflags) == 0);
  CHECK(fs::exists(dir.path / "eb" / "eval.csv"));
}
