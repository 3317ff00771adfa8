#include "sharpnerf/nn.hpp"

namespace sharpnerf::nn {

using ad::Tensor;

void init_linear(ad::ParameterStore& store, const std::string& name, std::size_t in,
                 std::size_t out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w = Tensor::zeros({in, out});
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  Tensor b = Tensor::zeros({out});
  for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.uniform(-bound, bound);
  store.create(name + "/w", std::move(w));
  store.create(name + "/b", std::move(b));
}

void init_linear_uniform(ad::ParameterStore& store, const std::string& name, std::size_t in,
                         std::size_t out, double bound, Rng& rng) {
  Tensor w = Tensor::zeros({in, out});
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  store.create(name + "/w", std::move(w));
  store.create(name + "/b", Tensor::zeros({out}));
}

Tensor linear(const ad::BoundParams& p, const std::string& name, const Tensor& x) {
  return ad::add(ad::matmul(x, p(name + "/w")), p(name + "/b"));
}

}  // namespace sharpnerf::nn
