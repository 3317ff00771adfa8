#include "sharpnerf/harness/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace sharpnerf::harness {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* op) {
  if (!a.same_shape(b))
    throw std::runtime_error(std::string(op) + ": image sizes differ (" +
                             std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                             std::to_string(b.width) + "x" + std::to_string(b.height) + ")");
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWindow * kWindow);
  double sum = 0.0;
  for (int y = 0; y < kWindow; ++y)
    for (int x = 0; x < kWindow; ++x) {
      const double dx = x - (kWindow - 1) / 2.0;
      const double dy = y - (kWindow - 1) / 2.0;
      w[y * kWindow + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      sum += w[y * kWindow + x];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = a.rgb[i] - b.rgb[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.rgb.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.width < kWindow || a.height < kWindow)
    throw std::runtime_error("ssim: image smaller than the 11x11 window");

  static const std::vector<double> win = gaussian_window();

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y + kWindow <= a.height; ++y) {
      for (std::size_t x = 0; x + kWindow <= a.width; ++x) {
        double mu_a = 0.0, mu_b = 0.0;
        for (int wy = 0; wy < kWindow; ++wy)
          for (int wx = 0; wx < kWindow; ++wx) {
            const double w = win[wy * kWindow + wx];
            mu_a += w * a.at(x + wx, y + wy, c);
            mu_b += w * b.at(x + wx, y + wy, c);
          }
        double var_a = 0.0, var_b = 0.0, cov = 0.0;
        for (int wy = 0; wy < kWindow; ++wy)
          for (int wx = 0; wx < kWindow; ++wx) {
            const double w = win[wy * kWindow + wx];
            const double da = a.at(x + wx, y + wy, c) - mu_a;
            const double db = b.at(x + wx, y + wy, c) - mu_b;
            var_a += w * da * da;
            var_b += w * db * db;
            cov += w * da * db;
          }
        const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
        const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        total += num / den;
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

ErrorMap error_map(const Image& a, const Image& b) {
  require_same_shape(a, b, "error_map");
  ErrorMap out;
  out.map = Image(a.width, a.height);
  double peak = 0.0;
  double total = 0.0;
  for (std::size_t y = 0; y < a.height; ++y)
    for (std::size_t x = 0; x < a.width; ++x) {
      double e = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        e += d * d;
      }
      e /= 3.0;
      out.map.at(x, y, 0) = e;
      peak = std::max(peak, e);
      total += e;
    }
  out.mean_mse = total / static_cast<double>(a.width * a.height);
  const double scale = peak > 0.0 ? 1.0 / peak : 0.0;
  for (std::size_t y = 0; y < a.height; ++y)
    for (std::size_t x = 0; x < a.width; ++x) {
      const double v = out.map.at(x, y, 0) * scale;
      out.map.at(x, y, 0) = v;
      out.map.at(x, y, 1) = v;
      out.map.at(x, y, 2) = v;
    }
  return out;
}

}  // namespace sharpnerf::harness
