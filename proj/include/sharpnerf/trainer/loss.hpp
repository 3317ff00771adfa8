#pragma once

#include "sharpnerf/autodiff/tensor.hpp"

namespace sharpnerf::train {

// Mean squared error over every element (batch and channels).
inline ad::Tensor mse(const ad::Tensor& target, const ad::Tensor& predicted) {
  ad::Tensor d = ad::sub(target, predicted);
  return ad::mean_all(ad::mul(d, d));
}

// lambda * MSE(B, B_coarse_composite) + (1 - lambda) * MSE(B, B_fine_composite).
inline ad::Tensor reconstruction_loss(const ad::Tensor& target, const ad::Tensor& composed,
                                      const ad::Tensor& refined, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw ad::AdError("reconstruction_loss: lambda must lie in [0,1]");
  return ad::add(ad::scale(mse(target, composed), lambda),
                 ad::scale(mse(target, refined), 1.0 - lambda));
}

}  // namespace sharpnerf::train
