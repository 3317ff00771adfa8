#include "sharpnerf/trainer/model.hpp"

#include <stdexcept>

#include "sharpnerf/rng.hpp"

namespace sharpnerf::train {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kFull: return "full";
    case ModelKind::kKernelOnly: return "kernel_only";
    case ModelKind::kNaive: return "naive";
  }
  throw std::runtime_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "full") return ModelKind::kFull;
  if (s == "kernel_only") return ModelKind::kKernelOnly;
  if (s == "naive") return ModelKind::kNaive;
  throw std::runtime_error("unknown model kind: " + s);
}

Model::Model(ModelConfig config, std::uint64_t init_seed)
    : cfg(config), coarse(config.field, "coarse"), fine(config.field, "fine") {
  Rng rng(init_seed);
  coarse.init(store, rng);
  fine.init(store, rng);
  if (cfg.use_kernel()) {
    rbk.emplace(cfg.rbk);
    rbk->init(store, rng);
  }
  if (cfg.use_awp()) {
    awp.emplace(cfg.awp_config());
    awp->init(store, rng);
  }
}

}  // namespace sharpnerf::train
