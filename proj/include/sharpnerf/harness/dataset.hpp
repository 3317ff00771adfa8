#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sharpnerf/harness/camera.hpp"
#include "sharpnerf/harness/image.hpp"

namespace sharpnerf::harness {

struct ViewRecord {
  CameraModel cam;
  Image blurred;  // the training signal
  Image sharp;    // ground truth, for evaluation only
  bool is_test = false;
};

// On-disk layout under one directory:
//   manifest.txt   view count, intrinsics, per-view role + pose (12 floats,
//                  row-major [R | position], full precision)
//   view_%04d.f32  blurred image, flat little-endian float32 (+ .ppm preview)
//   sharp_%04d.f32 sharp ground truth (+ .ppm preview)
//   blurspec.txt   how the blur was generated; audit-only
//
// The trainer opens the dataset in Trainer mode, which refuses to surface the
// blur parameters: deblurring stays blind by construction.
enum class DatasetAccess { kTrainer, kAudit };

class Dataset {
 public:
  static void export_dir(const std::string& dir, const std::vector<ViewRecord>& views,
                         const std::string& blur_audit_text);
  static Dataset import_dir(const std::string& dir, DatasetAccess access);

  // In-memory dataset (trainer access, no audit block).
  static Dataset from_views(std::vector<ViewRecord> views);

  // Cameras of a manifest file alone (no image loading); also accepts a
  // directory containing manifest.txt.
  static std::vector<CameraModel> read_poses(const std::string& path);

  struct PoseRecord {
    CameraModel cam;
    bool is_test = false;
  };
  static std::vector<PoseRecord> read_pose_records(const std::string& path);

  const std::vector<ViewRecord>& views() const { return views_; }
  std::vector<const ViewRecord*> train_views() const;
  std::vector<const ViewRecord*> test_views() const;

  // Audit mode only; Trainer-mode handles throw.
  const std::string& blur_audit() const;

 private:
  std::vector<ViewRecord> views_;
  DatasetAccess access_ = DatasetAccess::kTrainer;
  std::optional<std::string> audit_;
};

}  // namespace sharpnerf::harness
