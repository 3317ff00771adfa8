#include "sharpnerf/harness/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sharpnerf::harness {

namespace {

void put_le32(std::ofstream& out, const float* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &data[i], 4);
      char b[4];
      for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      out.write(b, 4);
    }
  }
}

}  // namespace

void write_f32(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_f32: cannot open " + path);
  std::vector<float> buf(img.rgb.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(img.rgb[i]);
  put_le32(out, buf.data(), buf.size());
  if (!out) throw std::runtime_error("write_f32: write failed for " + path);
}

Image read_f32(const std::string& path, std::size_t width, std::size_t height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_f32: cannot open " + path);
  Image img(width, height);
  std::vector<float> buf(img.rgb.size());
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  } else {
    for (std::size_t i = 0; i < buf.size(); ++i) {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(b[k]) << (8 * k);
      std::memcpy(&buf[i], &bits, 4);
    }
  }
  if (!in) throw std::runtime_error("read_f32: " + path + " is truncated");
  in.peek();
  if (!in.eof()) throw std::runtime_error("read_f32: " + path + " has trailing bytes");
  for (std::size_t i = 0; i < buf.size(); ++i) img.rgb[i] = static_cast<double>(buf[i]);
  return img;
}

void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.rgb.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(img.rgb[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

}  // namespace sharpnerf::harness
