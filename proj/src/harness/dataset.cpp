#include "sharpnerf/harness/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sharpnerf::harness {

namespace fs = std::filesystem;

namespace {

std::string num_name(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04zu%s", stem, i, ext);
  return buf;
}

void write_full(std::ostream& os, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

[[noreturn]] void malformed(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void Dataset::export_dir(const std::string& dir, const std::vector<ViewRecord>& views,
                         const std::string& blur_audit_text) {
  if (views.empty()) throw std::runtime_error("Dataset: nothing to export");
  const CameraModel& c0 = views.front().cam;
  for (const auto& v : views) {
    if (v.cam.width != c0.width || v.cam.height != c0.height)
      throw std::runtime_error("Dataset: inconsistent image sizes");
    if (!v.blurred.rgb.empty() &&
        (v.blurred.width != c0.width || v.blurred.height != c0.height))
      throw std::runtime_error("Dataset: blurred image size mismatch");
    if (v.sharp.width != c0.width || v.sharp.height != c0.height)
      throw std::runtime_error("Dataset: sharp image size mismatch");
  }

  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) throw std::runtime_error("Dataset: cannot write manifest in " + dir);

  manifest << "views " << views.size() << '\n';
  manifest << "intrinsics ";
  write_full(manifest, c0.focal);
  manifest << ' ' << c0.width << ' ' << c0.height << ' ';
  write_full(manifest, c0.t_near);
  manifest << ' ';
  write_full(manifest, c0.t_far);
  manifest << '\n';

  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    manifest << "view " << i << ' ' << (v.is_test ? "test" : "train");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        manifest << ' ';
        write_full(manifest, v.cam.rot(r, c));
      }
      manifest << ' ';
      write_full(manifest, v.cam.pos[r]);
    }
    manifest << '\n';

    const fs::path base(dir);
    if (!v.blurred.rgb.empty()) {
      write_f32(v.blurred, (base / num_name("view", i, ".f32")).string());
      write_ppm(v.blurred, (base / num_name("view", i, ".ppm")).string());
    }
    write_f32(v.sharp, (base / num_name("sharp", i, ".f32")).string());
    write_ppm(v.sharp, (base / num_name("sharp", i, ".ppm")).string());
  }
  if (!manifest) throw std::runtime_error("Dataset: manifest write failed");

  std::ofstream audit(fs::path(dir) / "blurspec.txt");
  audit << blur_audit_text;
}

namespace {

struct ManifestView {
  CameraModel cam;
  bool is_test = false;
};

std::vector<ManifestView> parse_manifest(const std::string& mpath) {
  std::ifstream manifest(mpath);
  if (!manifest) throw std::runtime_error("Dataset: cannot open " + mpath);

  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() {
    if (!std::getline(manifest, line)) malformed(mpath, lineno, "unexpected end of file");
    ++lineno;
  };

  next_line();
  std::size_t count = 0;
  {
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag >> count) || tag != "views") malformed(mpath, lineno, "expected 'views N'");
  }
  if (count == 0) malformed(mpath, lineno, "empty dataset");

  next_line();
  CameraModel proto;
  {
    std::istringstream is(line);
    std::string tag;
    if (!(is >> tag >> proto.focal >> proto.width >> proto.height >> proto.t_near >>
          proto.t_far) ||
        tag != "intrinsics")
      malformed(mpath, lineno, "expected 'intrinsics f w h near far'");
  }

  std::vector<ManifestView> out;
  for (std::size_t i = 0; i < count; ++i) {
    next_line();
    std::istringstream is(line);
    std::string tag, role;
    std::size_t idx;
    if (!(is >> tag >> idx >> role) || tag != "view" || idx != i)
      malformed(mpath, lineno, "expected 'view " + std::to_string(i) + " <role> <pose>'");
    if (role != "train" && role != "test") malformed(mpath, lineno, "unknown role " + role);

    ManifestView mv;
    mv.cam = proto;
    mv.is_test = role == "test";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c)
        if (!(is >> mv.cam.rot(r, c))) malformed(mpath, lineno, "truncated pose");
      double p;
      if (!(is >> p)) malformed(mpath, lineno, "truncated pose");
      if (r == 0) mv.cam.pos.x = p;
      if (r == 1) mv.cam.pos.y = p;
      if (r == 2) mv.cam.pos.z = p;
    }
    mv.cam.validate();
    out.push_back(mv);
  }
  return out;
}

}  // namespace

std::vector<CameraModel> Dataset::read_poses(const std::string& path) {
  std::vector<CameraModel> cams;
  for (const auto& rec : read_pose_records(path)) cams.push_back(rec.cam);
  return cams;
}

std::vector<Dataset::PoseRecord> Dataset::read_pose_records(const std::string& path) {
  std::string mpath = path;
  if (fs::is_directory(path)) mpath = (fs::path(path) / "manifest.txt").string();
  std::vector<PoseRecord> out;
  for (const auto& mv : parse_manifest(mpath)) out.push_back({mv.cam, mv.is_test});
  return out;
}

Dataset Dataset::import_dir(const std::string& dir, DatasetAccess access) {
  const std::string mpath = (fs::path(dir) / "manifest.txt").string();
  auto manifest_views = parse_manifest(mpath);

  Dataset ds;
  ds.access_ = access;

  for (std::size_t i = 0; i < manifest_views.size(); ++i) {
    ViewRecord rec;
    rec.cam = manifest_views[i].cam;
    rec.is_test = manifest_views[i].is_test;

    const fs::path base(dir);
    const std::string blurred_path = (base / num_name("view", i, ".f32")).string();
    if (fs::exists(blurred_path))
      rec.blurred = read_f32(blurred_path, rec.cam.width, rec.cam.height);
    rec.sharp = read_f32((base / num_name("sharp", i, ".f32")).string(), rec.cam.width,
                         rec.cam.height);
    ds.views_.push_back(std::move(rec));
  }

  if (access == DatasetAccess::kAudit) {
    std::ifstream audit(fs::path(dir) / "blurspec.txt");
    if (audit) {
      std::ostringstream ss;
      ss << audit.rdbuf();
      ds.audit_ = ss.str();
    } else {
      ds.audit_ = std::string();
    }
  }
  return ds;
}

Dataset Dataset::from_views(std::vector<ViewRecord> views) {
  Dataset ds;
  ds.views_ = std::move(views);
  ds.access_ = DatasetAccess::kTrainer;
  return ds;
}

std::vector<const ViewRecord*> Dataset::train_views() const {
  std::vector<const ViewRecord*> out;
  for (const auto& v : views_)
    if (!v.is_test) out.push_back(&v);
  return out;
}

std::vector<const ViewRecord*> Dataset::test_views() const {
  std::vector<const ViewRecord*> out;
  for (const auto& v : views_)
    if (v.is_test) out.push_back(&v);
  return out;
}

const std::string& Dataset::blur_audit() const {
  if (access_ != DatasetAccess::kAudit || !audit_)
    throw std::runtime_error(
        "Dataset: blur parameters are not readable through the trainer-facing loader");
  return *audit_;
}

}  // namespace sharpnerf::harness
