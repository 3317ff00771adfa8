#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sharpnerf/autodiff/checkpoint.hpp"
#include "sharpnerf/autodiff/params.hpp"

namespace sharpnerf::train {

// Bias-corrected Adam over a named parameter store. Moments live here,
// addressed by parameter name, and serialize through the same array format as
// the parameters themselves.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // One update. `grads` maps parameter name to its gradient; parameters
  // without an entry are left alone. Non-finite gradients abort, naming the
  // parameter.
  void step(ad::ParameterStore& store,
            const std::unordered_map<std::string, ad::Tensor>& grads, double lr);

  std::size_t steps_taken() const { return t_; }

  // Serialization through the checkpoint array format.
  std::vector<ad::NamedArrayRef> moment_arrays() const;
  void restore_moments(const std::vector<ad::NamedArray>& arrays, std::size_t steps);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::unordered_map<std::string, Moments> moments_;
  std::vector<std::string> order_;
};

}  // namespace sharpnerf::train
