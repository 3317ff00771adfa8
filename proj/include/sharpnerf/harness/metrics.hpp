#pragma once

#include "sharpnerf/harness/image.hpp"

namespace sharpnerf::harness {

// 10 log10(1 / MSE) for values in [0,1]; +infinity for identical images.
double psnr(const Image& a, const Image& b);

// Mean local structural similarity over all fully-valid 11x11 windows,
// Gaussian-weighted (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, computed per
// channel and averaged. Images must be at least 11x11.
double ssim(const Image& a, const Image& b);

struct ErrorMap {
  Image map;           // grayscale (stored as rgb triplets), scaled to [0,1] by the max
  double mean_mse = 0; // unscaled mean of the per-pixel channel-mean squared error
};
ErrorMap error_map(const Image& a, const Image& b);

}  // namespace sharpnerf::harness
