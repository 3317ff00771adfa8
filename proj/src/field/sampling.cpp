#include "sharpnerf/field/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace sharpnerf::field {

std::vector<double> stratified_uniforms(std::size_t n, Rng& rng) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n);
  return u;
}

std::vector<double> stratified_from_uniforms(double t_near, double t_far,
                                             std::span<const double> u) {
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = t_near + (t_far - t_near) * u[i];
  return t;
}

std::vector<double> stratified_sample(const Ray& ray, std::size_t n, Rng& rng) {
  if (n == 0) throw std::runtime_error("stratified_sample: need at least one sample");
  auto u = stratified_uniforms(n, rng);
  return stratified_from_uniforms(ray.t_near, ray.t_far, u);
}

std::vector<double> hierarchical_from_uniforms(std::span<const double> coarse_weights,
                                               double t_near, double t_far,
                                               std::span<const double> u) {
  const std::size_t nb = coarse_weights.size();
  if (nb == 0) throw std::runtime_error("hierarchical_from_uniforms: no coarse weights");
  constexpr double kFloor = 1e-5;

  std::vector<double> cdf(nb + 1, 0.0);
  for (std::size_t i = 0; i < nb; ++i) {
    const double w = coarse_weights[i];
    if (w < 0.0) throw std::runtime_error("hierarchical_from_uniforms: negative weight");
    cdf[i + 1] = cdf[i] + w + kFloor;
  }
  const double total = cdf[nb];

  const double bin_width = (t_far - t_near) / static_cast<double>(nb);
  std::vector<double> t(u.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    const double target = u[s] * total;
    const auto it = std::upper_bound(cdf.begin(), cdf.end() - 1, target);
    const std::size_t bin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::distance(cdf.begin(), it) - 1));
    const double lo = cdf[bin];
    const double hi = cdf[bin + 1];
    const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.5;
    t[s] = t_near + (static_cast<double>(bin) + frac) * bin_width;
  }
  std::sort(t.begin(), t.end());
  return t;
}

std::vector<double> hierarchical_sample(std::span<const double> coarse_weights, const Ray& ray,
                                        std::size_t n_fine, Rng& rng) {
  if (n_fine == 0) return {};
  auto u = stratified_uniforms(n_fine, rng);
  return hierarchical_from_uniforms(coarse_weights, ray.t_near, ray.t_far, u);
}

std::vector<double> merge_sorted(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), out.begin());
  return out;
}

}  // namespace sharpnerf::field
