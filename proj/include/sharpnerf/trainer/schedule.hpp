#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace sharpnerf::train {

// Exponential decay from lambda_start at e_i to lambda_end at e_f:
//   alpha = -log(l_s / l_e) / (e_f - e_i),  lambda = l_s * exp(alpha (e_c - e_i)).
// Both endpoints hold exactly.
inline double lambda_schedule(std::size_t e_c, std::size_t e_i, std::size_t e_f,
                              double lambda_start, double lambda_end) {
  if (e_i >= e_f) throw std::runtime_error("lambda_schedule: degenerate iteration range");
  if (e_c < e_i || e_c > e_f) throw std::runtime_error("lambda_schedule: e_c outside [e_i, e_f]");
  if (!(lambda_end > 0.0) || !(lambda_end < lambda_start) || !(lambda_start <= 1.0))
    throw std::runtime_error("lambda_schedule: need 0 < lambda_end < lambda_start <= 1");
  if (e_c == e_i) return lambda_start;
  if (e_c == e_f) return lambda_end;
  const double alpha = -std::log(lambda_start / lambda_end) / static_cast<double>(e_f - e_i);
  return lambda_start * std::exp(alpha * static_cast<double>(e_c - e_i));
}

// Geometric interpolation from lr_start at 0 to lr_end at e_f.
inline double lr_schedule(std::size_t e_c, std::size_t e_f, double lr_start, double lr_end) {
  if (e_f == 0 || e_c == 0) return lr_start;
  if (e_c == e_f) return lr_end;
  const double frac = static_cast<double>(e_c) / static_cast<double>(e_f);
  return lr_start * std::pow(lr_end / lr_start, frac);
}

}  // namespace sharpnerf::train
