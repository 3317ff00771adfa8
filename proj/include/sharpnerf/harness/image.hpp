#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sharpnerf::harness {

// Row-major H x W x 3 image. Values are kept as doubles in memory; the
// lossless on-disk form is flat little-endian float32 (.f32), with 8-bit P6
// PPM written alongside for eyeballing.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0.0) {}

  double& at(std::size_t x, std::size_t y, std::size_t c) {
    return rgb[(y * width + x) * 3 + c];
  }
  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return rgb[(y * width + x) * 3 + c];
  }
  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
};

void write_f32(const Image& img, const std::string& path);
Image read_f32(const std::string& path, std::size_t width, std::size_t height);

void write_ppm(const Image& img, const std::string& path);

}  // namespace sharpnerf::harness
