#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sharpnerf/autodiff/tensor.hpp"

namespace sharpnerf::ad {

// All learnable state, addressed by name. Binding produces per-use tensors
// that share the master storage: bound to a tape they become differentiable
// leaves; bound without one they are plain constants (inference).
class ParameterStore {
 public:
  Tensor& create(const std::string& name, Tensor initial);
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  const std::vector<std::string>& names() const { return order_; }
  std::size_t total_size() const;

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor> values_;
  std::unordered_map<std::string, bool> index_;
};

class BoundParams {
 public:
  BoundParams(const ParameterStore& store, Tape* tape);
  explicit BoundParams(std::unordered_map<std::string, Tensor> bound)
      : bound_(std::move(bound)) {}

  // Tensor for `name`; a tape leaf when bound to a tape.
  const Tensor& operator()(const std::string& name) const;

  // Node id of a bound leaf (tape mode only).
  int node_of(const std::string& name) const;

 private:
  std::unordered_map<std::string, Tensor> bound_;
};

// All parameters of `layout`, in registration order, as one flat vector.
Tensor flatten_store(const ParameterStore& layout);

// Binds each parameter of `layout` to a slice of `flat` (same ordering as
// flatten_store). Gradients w.r.t. `flat` then cover the whole model, which is
// what whole-pipeline finite-difference checks need.
BoundParams bind_from_flat(const ParameterStore& layout, const Tensor& flat);

}  // namespace sharpnerf::ad
