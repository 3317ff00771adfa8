#include "sharpnerf/cli/config.hpp"

#include <fstream>
#include <functional>
#include <unordered_map>

namespace sharpnerf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_num(const std::string& key, const std::string& value);

template <>
double parse_num<double>(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw UserError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
  if (used != value.size())
    throw UserError("config: key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

template <>
std::size_t parse_num<std::size_t>(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw UserError("config: key '" + key + "' expects a nonnegative integer, got '" + value +
                    "'");
  }
  if (used != value.size())
    throw UserError("config: key '" + key + "' expects a nonnegative integer, got '" + value +
                    "'");
  return static_cast<std::size_t>(v);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class T>
Setter num_setter(T RunConfig::* member) {
  return [member](RunConfig& cfg, const std::string& key, const std::string& value) {
    cfg.*member = parse_num<T>(key, value);
  };
}

Setter str_setter(std::string RunConfig::* member) {
  return [member](RunConfig& cfg, const std::string&, const std::string& value) {
    cfg.*member = value;
  };
}

Setter enum_setter(std::string RunConfig::* member, std::vector<std::string> allowed) {
  return [member, allowed](RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& a : allowed)
      if (a == value) {
        cfg.*member = value;
        return;
      }
    std::string opts;
    for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
    throw UserError("config: key '" + key + "' must be one of " + opts + ", got '" + value + "'");
  };
}

const std::unordered_map<std::string, Setter>& schema() {
  static const std::unordered_map<std::string, Setter> s = {
      {"scene", enum_setter(&RunConfig::scene, {"two_spheres_box", "single_sphere", "box_room"})},
      {"blur", enum_setter(&RunConfig::blur, {"motion", "defocus", "none"})},
      {"motion_samples", num_setter(&RunConfig::motion_samples)},
      {"motion_rot_amp", num_setter(&RunConfig::motion_rot_amp)},
      {"motion_trans_amp", num_setter(&RunConfig::motion_trans_amp)},
      {"aperture_samples", num_setter(&RunConfig::aperture_samples)},
      {"defocus_aperture", num_setter(&RunConfig::defocus_aperture)},
      {"defocus_focus_dist", num_setter(&RunConfig::defocus_focus_dist)},
      {"views_train", num_setter(&RunConfig::views_train)},
      {"views_test", num_setter(&RunConfig::views_test)},
      {"image_size", num_setter(&RunConfig::image_size)},
      {"focal", num_setter(&RunConfig::focal)},
      {"cam_radius", num_setter(&RunConfig::cam_radius)},
      {"cam_height", num_setter(&RunConfig::cam_height)},
      {"cam_arc", num_setter(&RunConfig::cam_arc)},
      {"t_near", num_setter(&RunConfig::t_near)},
      {"t_far", num_setter(&RunConfig::t_far)},
      {"render_samples", num_setter(&RunConfig::render_samples)},
      {"k", num_setter(&RunConfig::k)},
      {"field_width", num_setter(&RunConfig::field_width)},
      {"field_depth", num_setter(&RunConfig::field_depth)},
      {"field_feature_dim", num_setter(&RunConfig::field_feature_dim)},
      {"m_pos", num_setter(&RunConfig::m_pos)},
      {"m_dir", num_setter(&RunConfig::m_dir)},
      {"skip_layer", num_setter(&RunConfig::skip_layer)},
      {"latent_dim", num_setter(&RunConfig::latent_dim)},
      {"rbk_encoder_width", num_setter(&RunConfig::rbk_encoder_width)},
      {"rbk_encoder_depth", num_setter(&RunConfig::rbk_encoder_depth)},
      {"rbk_decoder_hidden", num_setter(&RunConfig::rbk_decoder_hidden)},
      {"awp_embed_dim", num_setter(&RunConfig::awp_embed_dim)},
      {"awp_cond_dim", num_setter(&RunConfig::awp_cond_dim)},
      {"awp_corr_dim", num_setter(&RunConfig::awp_corr_dim)},
      {"awp_hidden", num_setter(&RunConfig::awp_hidden)},
      {"batch_rays", num_setter(&RunConfig::batch_rays)},
      {"n_coarse", num_setter(&RunConfig::n_coarse)},
      {"n_fine", num_setter(&RunConfig::n_fine)},
      {"lr_start", num_setter(&RunConfig::lr_start)},
      {"lr_end", num_setter(&RunConfig::lr_end)},
      {"lambda_start", num_setter(&RunConfig::lambda_start)},
      {"lambda_end", num_setter(&RunConfig::lambda_end)},
      {"warmup_iters", num_setter(&RunConfig::warmup_iters)},
      {"total_iters", num_setter(&RunConfig::total_iters)},
      {"checkpoint_interval", num_setter(&RunConfig::checkpoint_interval)},
      {"seed", num_setter(&RunConfig::seed)},
      {"dataset", str_setter(&RunConfig::dataset)},
      {"checkpoint", str_setter(&RunConfig::checkpoint)},
      {"baseline_checkpoint", str_setter(&RunConfig::baseline_checkpoint)},
      {"poses", str_setter(&RunConfig::poses)},
      {"eval_split", enum_setter(&RunConfig::eval_split, {"test", "train", "all"})},
      {"spiral_frames", num_setter(&RunConfig::spiral_frames)},
      {"spiral_radius", num_setter(&RunConfig::spiral_radius)},
      {"spiral_turns", num_setter(&RunConfig::spiral_turns)},
      {"spiral_depth_osc", num_setter(&RunConfig::spiral_depth_osc)},
      {"render_chunk", num_setter(&RunConfig::render_chunk)},
  };
  return s;
}

}  // namespace

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto it = schema().find(key);
  if (it == schema().end()) throw UserError("config: unknown key '" + key + "'");
  it->second(cfg, key, value);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UserError("config: " + path + ":" + std::to_string(lineno) +
                      ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw UserError("config: " + path + ":" + std::to_string(lineno) + ": empty key or value");
    apply_key(cfg, key, value);
  }
  return cfg;
}

train::TrainConfig RunConfig::train_config() const {
  train::TrainConfig tc;
  tc.batch_rays = batch_rays;
  tc.n_coarse = n_coarse;
  tc.n_fine = n_fine;
  tc.lr_start = lr_start;
  tc.lr_end = lr_end;
  tc.lambda_start = lambda_start;
  tc.lambda_end = lambda_end;
  tc.warmup_iters = warmup_iters;
  tc.total_iters = total_iters;
  tc.seed = seed;
  return tc;
}

train::ModelConfig RunConfig::model_config(train::ModelKind kind, std::size_t n_images) const {
  train::ModelConfig mc;
  mc.kind = kind;
  mc.field.width = field_width;
  mc.field.depth = field_depth;
  mc.field.feature_dim = field_feature_dim;
  mc.field.m_pos = m_pos;
  mc.field.m_dir = m_dir;
  mc.field.skip_layer = skip_layer;
  mc.rbk.k = k;
  mc.rbk.n_images = n_images;
  mc.rbk.latent_dim = latent_dim;
  mc.rbk.encoder_width = rbk_encoder_width;
  mc.rbk.encoder_depth = rbk_encoder_depth;
  mc.rbk.decoder_hidden = rbk_decoder_hidden;
  mc.awp_embed_dim = awp_embed_dim;
  mc.awp_cond_dim = awp_cond_dim;
  mc.awp_corr_dim = awp_corr_dim;
  mc.awp_hidden = awp_hidden;
  return mc;
}

}  // namespace sharpnerf::cli
