#include "sharpnerf/autodiff/params.hpp"

namespace sharpnerf::ad {

Tensor& ParameterStore::create(const std::string& name, Tensor initial) {
  if (has(name)) throw AdError("ParameterStore: duplicate parameter " + name);
  order_.push_back(name);
  index_[name] = true;
  return values_.emplace(name, std::move(initial)).first->second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw AdError("ParameterStore: unknown parameter " + name);
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw AdError("ParameterStore: unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += values_.at(name).size();
  return n;
}

BoundParams::BoundParams(const ParameterStore& store, Tape* tape) {
  for (const auto& name : store.names()) {
    const Tensor& master = store.get(name);
    // Shares storage with the master; forward passes never mutate inputs.
    Tensor view = master;
    if (tape) tape->leaf(view);
    bound_.emplace(name, std::move(view));
  }
}

const Tensor& BoundParams::operator()(const std::string& name) const {
  auto it = bound_.find(name);
  if (it == bound_.end()) throw AdError("BoundParams: unknown parameter " + name);
  return it->second;
}

int BoundParams::node_of(const std::string& name) const {
  const Tensor& t = (*this)(name);
  if (!t.requires_grad()) throw AdError("BoundParams: " + name + " is not bound to a tape");
  return t.node();
}

Tensor flatten_store(const ParameterStore& layout) {
  std::vector<double> all;
  all.reserve(layout.total_size());
  for (const auto& name : layout.names()) {
    const Tensor& t = layout.get(name);
    all.insert(all.end(), t.data(), t.data() + t.size());
  }
  const std::size_t n = all.size();
  return Tensor({n}, std::move(all));
}

BoundParams bind_from_flat(const ParameterStore& layout, const Tensor& flat) {
  if (flat.rank() != 1 || flat.size() != layout.total_size())
    throw AdError("bind_from_flat: flat vector has " + std::to_string(flat.size()) +
                  " values, layout needs " + std::to_string(layout.total_size()));
  std::unordered_map<std::string, Tensor> bound;
  std::size_t offset = 0;
  for (const auto& name : layout.names()) {
    const Tensor& proto = layout.get(name);
    Tensor piece = reshape(slice(flat, 0, offset, offset + proto.size()), proto.shape());
    bound.emplace(name, std::move(piece));
    offset += proto.size();
  }
  return BoundParams(std::move(bound));
}

}  // namespace sharpnerf::ad
