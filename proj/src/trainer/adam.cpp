#include "sharpnerf/trainer/adam.hpp"

#include <cmath>

namespace sharpnerf::train {

void Adam::step(ad::ParameterStore& store,
                const std::unordered_map<std::string, ad::Tensor>& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  for (const auto& name : store.names()) {
    auto git = grads.find(name);
    if (git == grads.end()) continue;
    const ad::Tensor& g = git->second;
    ad::Tensor& param = store.get(name);
    if (g.size() != param.size())
      throw ad::AdError("Adam: gradient shape mismatch for " + name);

    auto [it, fresh] = moments_.try_emplace(name);
    if (fresh) {
      it->second.m.assign(param.size(), 0.0);
      it->second.v.assign(param.size(), 0.0);
      order_.push_back(name);
    }
    auto& mom = it->second;

    double* p = param.data();
    const double* gd = g.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
      if (!std::isfinite(gd[i]))
        throw ad::AdError("Adam: non-finite gradient in parameter " + name);
      mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * gd[i];
      mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * gd[i] * gd[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::vector<ad::NamedArrayRef> Adam::moment_arrays() const {
  std::vector<ad::NamedArrayRef> out;
  out.reserve(order_.size() * 2);
  for (const auto& name : order_) {
    const auto& mom = moments_.at(name);
    out.push_back({"adam.m/" + name, {mom.m.size()}, mom.m.data(), mom.m.size()});
    out.push_back({"adam.v/" + name, {mom.v.size()}, mom.v.data(), mom.v.size()});
  }
  return out;
}

void Adam::restore_moments(const std::vector<ad::NamedArray>& arrays, std::size_t steps) {
  moments_.clear();
  order_.clear();
  t_ = steps;
  for (const auto& a : arrays) {
    const bool is_m = a.name.rfind("adam.m/", 0) == 0;
    const bool is_v = a.name.rfind("adam.v/", 0) == 0;
    if (!is_m && !is_v) throw ad::AdError("Adam: unexpected moment array " + a.name);
    const std::string pname = a.name.substr(7);
    auto [it, fresh] = moments_.try_emplace(pname);
    if (fresh) order_.push_back(pname);
    (is_m ? it->second.m : it->second.v) = a.data;
  }
  for (const auto& name : order_) {
    const auto& mom = moments_.at(name);
    if (mom.m.size() != mom.v.size() || mom.m.empty())
      throw ad::AdError("Adam: incomplete moments for " + name);
  }
}

}  // namespace sharpnerf::train
