#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sharpnerf::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct AdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Tape;

namespace detail {
struct Recorder;

// Flat storage drawn from a recycling pool: training allocates and frees the
// same activation sizes every step, so buffers go back to a free list instead
// of the heap.
class Buffer {
 public:
  explicit Buffer(std::size_t n);
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;
  ~Buffer();

  double* data() { return data_; }
  const double* data() const { return data_; }
  std::size_t size() const { return size_; }

 private:
  double* data_;
  std::size_t size_;
};
}  // namespace detail

// Dense row-major f64 value. A tensor participates in differentiation iff it
// carries a tape node (node >= 0); plain tensors are free-standing values.
class Tensor {
 public:
  Tensor() : store_(std::make_shared<detail::Buffer>(0)) {}
  Tensor(Shape shape, std::vector<double> values);

  static Tensor zeros(Shape shape);
  // Contents unspecified; for outputs that are fully overwritten.
  static Tensor uninitialized(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return store_->size(); }
  double* data() { return store_->data(); }
  const double* data() const { return store_->data(); }
  std::span<const double> values() const { return {store_->data(), store_->size()}; }

  double item() const;          // scalar tensors only
  double at(std::size_t i) const { return store_->data()[i]; }

  bool requires_grad() const { return node_ >= 0; }
  int node() const { return node_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  friend struct detail::Recorder;
  Shape shape_;
  std::shared_ptr<detail::Buffer> store_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Recorded forward pass. Nodes are appended in execution order, so inputs
// always precede their consumers; backward walks the list once in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Marks t as a differentiable leaf and returns its node id.
  int leaf(Tensor& t);

  // Gradient of a scalar root w.r.t. every recorded node. Leaves unreachable
  // from the root get zero gradients. May be called repeatedly (independent
  // results) and for several roots on the same tape.
  std::unordered_map<int, Tensor> backward(const Tensor& root) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend struct detail::Recorder;

  struct Node {
    int op = 0;
    std::vector<int> input_nodes;     // -1 for constant inputs
    std::vector<Tensor> input_values; // saved forward values (shared storage)
    std::vector<double> aux;          // op-specific scalars (axis, exponent, ...)
    Tensor out;
  };

  std::vector<Node> nodes_;
};

// ---- primitive operations -------------------------------------------------
// Elementwise binaries broadcast with the standard right-aligned rule.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);  // strictly 2-D
Tensor relu(const Tensor& x);                     // subgradient 0 at the kink
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor pow_const(const Tensor& x, double p);
Tensor sum_axis(const Tensor& x, std::size_t axis);
Tensor mean_axis(const Tensor& x, std::size_t axis);
Tensor max_axis(const Tensor& x, std::size_t axis);
Tensor softmax_axis(const Tensor& x, std::size_t axis);  // max-subtracted
Tensor concat_axis(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t stop);
Tensor broadcast_to(const Tensor& x, const Shape& target);

// Structural ops (pure data movement, exact gradients).
Tensor reshape(const Tensor& x, Shape target);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& dims);
Tensor transpose2d(const Tensor& x);

// Conveniences over the primitives (no new node kinds).
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor neg(const Tensor& x);
Tensor softplus(const Tensor& x);  // log(1 + e^x), overflow-safe
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Max relative error between analytic gradients of f and central finite
// differences with step h, taken over all coordinates of x:
//   max_i |analytic_i - fd_i| / max(1, |analytic_i|)
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h);

}  // namespace sharpnerf::ad
