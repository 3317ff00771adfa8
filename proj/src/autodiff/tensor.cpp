#include "sharpnerf/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "sharpnerf/parallel.hpp"

namespace sharpnerf::ad {

namespace {

enum Op : int {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kRelu,
  kSigmoid,
  kExp,
  kLog,
  kSin,
  kCos,
  kPowConst,
  kSumAxis,
  kMeanAxis,
  kMaxAxis,
  kSoftmaxAxis,
  kConcatAxis,
  kSlice,
  kBroadcast,
  kReshape,
  kPermute,
};

[[noreturn]] void fail(const std::string& op, const std::string& msg) {
  throw AdError(op + ": " + msg);
}

// Output shape of a right-aligned broadcast, or error.
Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      fail(op, "incompatible shapes " + shape_str(a) + " and " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Row-major strides padded to `rank`, with stride 0 on broadcast dims.
std::vector<std::size_t> bcast_strides(const Shape& s, std::size_t rank, const Shape& out) {
  std::vector<std::size_t> st(rank, 0);
  std::size_t acc = 1;
  const std::size_t pad = rank - s.size();
  for (std::size_t i = s.size(); i-- > 0;) {
    st[pad + i] = (s[i] == 1 && out[pad + i] != 1) ? 0 : acc;
    acc *= s[i];
  }
  return st;
}

// Visits every element of `out_shape` in row-major order, handing the flat
// indices into two broadcast inputs to fn(o, ia, ib).
template <class F>
void for_each_bcast(const Shape& out_shape, const Shape& a, const Shape& b, F&& fn) {
  const std::size_t rank = out_shape.size();
  const std::size_t total = numel(out_shape);
  if (rank == 0) {
    if (total) fn(0, 0, 0);
    return;
  }
  const auto sa = bcast_strides(a, rank, out_shape);
  const auto sb = bcast_strides(b, rank, out_shape);
  std::vector<std::size_t> ctr(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t o = 0; o < total; ++o) {
    fn(o, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ++ctr[d];
      ia += sa[d];
      ib += sb[d];
      if (ctr[d] < out_shape[d]) break;
      ia -= sa[d] * out_shape[d];
      ib -= sb[d] * out_shape[d];
      ctr[d] = 0;
    }
  }
}

// Sums `src` (shape src_shape) into a tensor of shape dst_shape, where
// dst_shape broadcasts to src_shape. Used by backward of broadcasting ops.
void reduce_into(const double* src, const Shape& src_shape, double* dst, const Shape& dst_shape) {
  for_each_bcast(src_shape, src_shape, dst_shape,
                 [&](std::size_t o, std::size_t is, std::size_t id) {
                   (void)is;
                   dst[id] += src[o];
                 });
}

struct AxisSplit {
  std::size_t outer, n, inner;
};

AxisSplit split_axis(const char* op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) fail(op, "axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  AxisSplit r{1, s[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape r;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) r.push_back(s[i]);
  return r;
}

constexpr std::size_t kParallelCutoff = 16384;

// Broadcast layout taxonomy for the binary-op hot paths. "Suffix" means the
// smaller operand's shape right-aligns with the larger one (a repeated row,
// e.g. a bias); "scalar" is a single element.
enum class BcastKind { kSame, kScalarRhs, kScalarLhs, kSuffixRhs, kSuffixLhs, kGeneric };

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  for (std::size_t i = 0; i < small.size(); ++i)
    if (small[small.size() - 1 - i] != big[big.size() - 1 - i]) return false;
  return true;
}

BcastKind classify(const Shape& a, const Shape& b, std::size_t asize, std::size_t bsize) {
  if (a == b) return BcastKind::kSame;
  if (bsize == 1) return BcastKind::kScalarRhs;
  if (asize == 1) return BcastKind::kScalarLhs;
  if (is_suffix(b, a)) return BcastKind::kSuffixRhs;
  if (is_suffix(a, b)) return BcastKind::kSuffixLhs;
  return BcastKind::kGeneric;
}

}  // namespace

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

namespace detail {

namespace {
// Exact-size free lists. A training step cycles through a fixed set of
// activation shapes, so nearly every acquisition is a recycled hit.
class BufferPool {
 public:
  double* acquire(std::size_t n) {
    if (n == 0) return nullptr;
    std::lock_guard<std::mutex> lk(mu_);
    auto it = free_.find(n);
    if (it != free_.end() && !it->second.empty()) {
      double* p = it->second.back();
      it->second.pop_back();
      return p;
    }
    return static_cast<double*>(::operator new(n * sizeof(double)));
  }

  void release(double* p, std::size_t n) {
    if (!p) return;
    std::lock_guard<std::mutex> lk(mu_);
    auto& bucket = free_[n];
    if (bucket.size() < 64) {
      bucket.push_back(p);
    } else {
      ::operator delete(p);
    }
  }

 private:
  std::mutex mu_;
  std::unordered_map<std::size_t, std::vector<double*>> free_;
};

BufferPool& pool() {
  static BufferPool* p = new BufferPool;  // leaked deliberately: outlives statics
  return *p;
}
}  // namespace

Buffer::Buffer(std::size_t n) : data_(pool().acquire(n)), size_(n) {}
Buffer::~Buffer() { pool().release(data_, size_); }

}  // namespace detail

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  if (numel(shape) != values.size())
    throw AdError("Tensor: shape " + shape_str(shape) + " does not match " +
                  std::to_string(values.size()) + " values");
  shape_ = std::move(shape);
  store_ = std::make_shared<detail::Buffer>(values.size());
  std::memcpy(store_->data(), values.data(), values.size() * sizeof(double));
}

Tensor Tensor::uninitialized(Shape shape) {
  Tensor t;
  t.store_ = std::make_shared<detail::Buffer>(numel(shape));
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  Tensor t = uninitialized(std::move(shape));
  std::memset(t.data(), 0, t.size() * sizeof(double));
  return t;
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t = uninitialized(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data()[i * n + i] = 1.0;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw AdError("item: tensor " + shape_str(shape_) + " is not a scalar");
  return store_->data()[0];
}

// ---- recording --------------------------------------------------------------

namespace detail {
struct Recorder {
  static Tensor record(const char* name, int op, std::span<const Tensor> inputs,
                       std::vector<double> aux, Tensor out) {
    Tape* tape = nullptr;
    for (const Tensor& in : inputs) {
      if (!in.tape_) continue;
      if (tape && tape != in.tape_) fail(name, "inputs belong to different tapes");
      tape = in.tape_;
    }
    if (!tape) return out;
    Tape::Node node;
    node.op = op;
    node.aux = std::move(aux);
    for (const Tensor& in : inputs) {
      node.input_nodes.push_back(in.node_);
      node.input_values.push_back(in);
    }
    out.tape_ = tape;
    out.node_ = static_cast<int>(tape->nodes_.size());
    node.out = out;
    tape->nodes_.push_back(std::move(node));
    return out;
  }
};
}  // namespace detail

namespace {
Tensor record(const char* name, int op, std::span<const Tensor> inputs, std::vector<double> aux,
              Tensor out) {
  return detail::Recorder::record(name, op, inputs, std::move(aux), std::move(out));
}
Tensor record2(const char* name, int op, const Tensor& a, const Tensor& b, Tensor out) {
  const Tensor ins[2] = {a, b};
  return record(name, op, ins, {}, std::move(out));
}
Tensor record1(const char* name, int op, const Tensor& x, std::vector<double> aux, Tensor out) {
  const Tensor ins[1] = {x};
  return record(name, op, ins, std::move(aux), std::move(out));
}
}  // namespace

int Tape::leaf(Tensor& t) {
  if (t.tape_) throw AdError("leaf: tensor already registered on a tape");
  t.tape_ = this;
  t.node_ = static_cast<int>(nodes_.size());
  Node node;
  node.op = kLeaf;
  node.out = t;
  nodes_.push_back(std::move(node));
  return t.node_;
}

// ---- elementwise binaries ----------------------------------------------------

namespace {

template <class F>
Tensor ew_binary(const char* name, int op, const Tensor& a, const Tensor& b, F&& f) {
  Shape out_shape = broadcast_shape(name, a.shape(), b.shape());
  Tensor out = Tensor::uninitialized(out_shape);
  double* o = out.data();
  const double* pa = a.data();
  const double* pb = b.data();
  const std::size_t n = out.size();
  switch (classify(a.shape(), b.shape(), a.size(), b.size())) {
    case BcastKind::kSame: {
      if (n >= kParallelCutoff) {
        parallel_for(n, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t i = lo; i < hi; ++i) o[i] = f(pa[i], pb[i]);
        });
      } else {
        for (std::size_t i = 0; i < n; ++i) o[i] = f(pa[i], pb[i]);
      }
      break;
    }
    case BcastKind::kScalarRhs: {
      const double s = pb[0];
      for (std::size_t i = 0; i < n; ++i) o[i] = f(pa[i], s);
      break;
    }
    case BcastKind::kScalarLhs: {
      const double s = pa[0];
      for (std::size_t i = 0; i < n; ++i) o[i] = f(s, pb[i]);
      break;
    }
    case BcastKind::kSuffixRhs: {
      const std::size_t inner = b.size();
      for (std::size_t base = 0; base < n; base += inner)
        for (std::size_t i = 0; i < inner; ++i) o[base + i] = f(pa[base + i], pb[i]);
      break;
    }
    case BcastKind::kSuffixLhs: {
      const std::size_t inner = a.size();
      for (std::size_t base = 0; base < n; base += inner)
        for (std::size_t i = 0; i < inner; ++i) o[base + i] = f(pa[i], pb[base + i]);
      break;
    }
    case BcastKind::kGeneric:
      for_each_bcast(out_shape, a.shape(), b.shape(), [&](std::size_t i, std::size_t ia,
                                                          std::size_t ib) {
        o[i] = f(pa[ia], pb[ib]);
      });
      break;
  }
  return record2(name, op, a, b, std::move(out));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return ew_binary("add", kAdd, a, b, [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return ew_binary("sub", kSub, a, b, [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return ew_binary("mul", kMul, a, b, [](double x, double y) { return x * y; });
}

// ---- matmul -------------------------------------------------------------------

namespace {

// C(m x n) = A(m x k) * B(k x n) with a 4x16 register-blocked microkernel;
// rows of C are partitioned across threads, the per-element reduction order
// over k is fixed, so results do not depend on the thread count.
constexpr std::size_t kMR = 4;
constexpr std::size_t kNR = 16;

void matmul_tile(const double* __restrict a, const double* __restrict b, double* __restrict c,
                 std::size_t k, std::size_t n, std::size_t mr, std::size_t nr, std::size_t i0,
                 std::size_t j0, bool accumulate) {
  double acc[kMR][kNR];
  for (std::size_t r = 0; r < mr; ++r)
    for (std::size_t j = 0; j < nr; ++j)
      acc[r][j] = accumulate ? c[(i0 + r) * n + j0 + j] : 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    const double* bl = b + l * n + j0;
    for (std::size_t r = 0; r < mr; ++r) {
      const double av = a[(i0 + r) * k + l];
      for (std::size_t j = 0; j < nr; ++j) acc[r][j] += av * bl[j];
    }
  }
  for (std::size_t r = 0; r < mr; ++r)
    for (std::size_t j = 0; j < nr; ++j) c[(i0 + r) * n + j0 + j] = acc[r][j];
}

// Fully unrolled center-case tile; the compiler keeps acc in registers.
void matmul_tile_full(const double* __restrict a, const double* __restrict b,
                      double* __restrict c, std::size_t k, std::size_t n, std::size_t i0,
                      std::size_t j0, bool accumulate) {
  double acc[kMR][kNR];
  for (std::size_t r = 0; r < kMR; ++r)
    for (std::size_t j = 0; j < kNR; ++j)
      acc[r][j] = accumulate ? c[(i0 + r) * n + j0 + j] : 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    const double* bl = b + l * n + j0;
    const double a0 = a[(i0 + 0) * k + l];
    const double a1 = a[(i0 + 1) * k + l];
    const double a2 = a[(i0 + 2) * k + l];
    const double a3 = a[(i0 + 3) * k + l];
    for (std::size_t j = 0; j < kNR; ++j) {
      const double bv = bl[j];
      acc[0][j] += a0 * bv;
      acc[1][j] += a1 * bv;
      acc[2][j] += a2 * bv;
      acc[3][j] += a3 * bv;
    }
  }
  for (std::size_t r = 0; r < kMR; ++r)
    for (std::size_t j = 0; j < kNR; ++j) c[(i0 + r) * n + j0 + j] = acc[r][j];
}

void matmul_core(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                 std::size_t n, bool accumulate) {
  auto rows = [&](std::size_t lo, std::size_t hi) {
    std::size_t i = lo;
    for (; i + kMR <= hi; i += kMR) {
      std::size_t j = 0;
      for (; j + kNR <= n; j += kNR) matmul_tile_full(a, b, c, k, n, i, j, accumulate);
      if (j < n) matmul_tile(a, b, c, k, n, kMR, n - j, i, j, accumulate);
    }
    if (i < hi) {
      std::size_t j = 0;
      for (; j + kNR <= n; j += kNR) matmul_tile(a, b, c, k, n, hi - i, kNR, i, j, accumulate);
      if (j < n) matmul_tile(a, b, c, k, n, hi - i, n - j, i, j, accumulate);
    }
  };
  if (m * k * n >= kParallelCutoff) {
    // Chunks aligned to the row-block size so threads never share a tile.
    const std::size_t blocks = (m + kMR - 1) / kMR;
    parallel_for(blocks, [&](std::size_t blo, std::size_t bhi) {
      rows(blo * kMR, std::min(m, bhi * kMR));
    });
  } else {
    rows(0, m);
  }
}

void matmul_raw(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                std::size_t n) {
  matmul_core(a, b, c, m, k, n, false);
}

// 8x8-blocked out-of-place transpose.
void transpose_raw(const double* src, double* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t kB = 8;
  for (std::size_t i0 = 0; i0 < rows; i0 += kB)
    for (std::size_t j0 = 0; j0 < cols; j0 += kB) {
      const std::size_t ihi = std::min(rows, i0 + kB);
      const std::size_t jhi = std::min(cols, j0 + kB);
      for (std::size_t i = i0; i < ihi; ++i)
        for (std::size_t j = j0; j < jhi; ++j) dst[j * rows + i] = src[i * cols + j];
    }
}

// dA(m x k) += dC(m x n) * B^T;  dB(k x n) += A^T * dC(m x n).
// Both reuse the forward microkernel on a transposed copy of the small-side
// operand.
void matmul_grad_a(const double* dc, const double* b, double* da, std::size_t m, std::size_t k,
                   std::size_t n) {
  std::vector<double> bt(k * n);
  transpose_raw(b, bt.data(), k, n);
  matmul_core(dc, bt.data(), da, m, n, k, true);
}

void matmul_grad_b(const double* a, const double* dc, double* db, std::size_t m, std::size_t k,
                   std::size_t n) {
  std::vector<double> at(m * k);
  transpose_raw(a, at.data(), m, k);
  matmul_core(at.data(), dc, db, k, m, n, true);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    fail("matmul", "expects 2-D operands, got " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
  if (a.shape()[1] != b.shape()[0])
    fail("matmul", "inner dimensions differ: " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out = Tensor::uninitialized({m, n});
  matmul_raw(a.data(), b.data(), out.data(), m, k, n);
  return record2("matmul", kMatmul, a, b, std::move(out));
}

// ---- elementwise unaries -------------------------------------------------------

namespace {

template <class F>
Tensor ew_unary(const char* name, int op, const Tensor& x, F&& f, std::vector<double> aux = {}) {
  Tensor out = Tensor::uninitialized(x.shape());
  const double* px = x.data();
  double* po = out.data();
  const std::size_t n = x.size();
  if (n >= kParallelCutoff) {
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) po[i] = f(px[i]);
    });
  } else {
    for (std::size_t i = 0; i < n; ++i) po[i] = f(px[i]);
  }
  return record1(name, op, x, std::move(aux), std::move(out));
}

}  // namespace

Tensor relu(const Tensor& x) {
  return ew_unary("relu", kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return ew_unary("sigmoid", kSigmoid, x, [](double v) {
    // Split by sign so large |v| never overflows exp.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Tensor exp(const Tensor& x) {
  return ew_unary("exp", kExp, x, [](double v) { return std::exp(v); });
}

Tensor log(const Tensor& x) {
  const double* px = x.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(px[i] > 0.0)) fail("log", "domain error: value " + std::to_string(px[i]));
  return ew_unary("log", kLog, x, [](double v) { return std::log(v); });
}

Tensor sin(const Tensor& x) {
  return ew_unary("sin", kSin, x, [](double v) { return std::sin(v); });
}

Tensor cos(const Tensor& x) {
  return ew_unary("cos", kCos, x, [](double v) { return std::cos(v); });
}

Tensor pow_const(const Tensor& x, double p) {
  const double* px = x.data();
  const bool integral = p == std::floor(p);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (px[i] < 0.0 && !integral)
      fail("pow_const", "negative base " + std::to_string(px[i]) + " with non-integer exponent");
    if (px[i] == 0.0 && p < 0.0) fail("pow_const", "zero base with negative exponent");
  }
  return ew_unary("pow_const", kPowConst, x, [p](double v) { return std::pow(v, p); }, {p});
}

// ---- reductions -----------------------------------------------------------------

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_axis("sum_axis", x.shape(), axis);
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  const double* px = x.data();
  double* po = out.data();
  auto body = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ot = lo; ot < hi; ++ot) {
      const double* base = px + ot * sp.n * sp.inner;
      double* obase = po + ot * sp.inner;
      for (std::size_t j = 0; j < sp.n; ++j)
        for (std::size_t i = 0; i < sp.inner; ++i) obase[i] += base[j * sp.inner + i];
    }
  };
  if (x.size() >= kParallelCutoff)
    parallel_for(sp.outer, body);
  else
    body(0, sp.outer);
  return record1("sum_axis", kSumAxis, x, {static_cast<double>(axis)}, std::move(out));
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_axis("mean_axis", x.shape(), axis);
  if (sp.n == 0) fail("mean_axis", "cannot average over empty axis");
  Tensor out = Tensor::zeros(drop_axis(x.shape(), axis));
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t ot = 0; ot < sp.outer; ++ot) {
    const double* base = px + ot * sp.n * sp.inner;
    double* obase = po + ot * sp.inner;
    for (std::size_t j = 0; j < sp.n; ++j)
      for (std::size_t i = 0; i < sp.inner; ++i) obase[i] += base[j * sp.inner + i];
    for (std::size_t i = 0; i < sp.inner; ++i) obase[i] /= static_cast<double>(sp.n);
  }
  return record1("mean_axis", kMeanAxis, x, {static_cast<double>(axis)}, std::move(out));
}

Tensor max_axis(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_axis("max_axis", x.shape(), axis);
  if (sp.n == 0) fail("max_axis", "cannot reduce over empty axis");
  Tensor out = Tensor::uninitialized(drop_axis(x.shape(), axis));
  std::vector<double> argmax(out.size(), 0.0);
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t ot = 0; ot < sp.outer; ++ot) {
    const double* base = px + ot * sp.n * sp.inner;
    for (std::size_t i = 0; i < sp.inner; ++i) {
      double best = base[i];
      std::size_t arg = 0;
      for (std::size_t j = 1; j < sp.n; ++j) {
        const double v = base[j * sp.inner + i];
        if (v > best) {
          best = v;
          arg = j;
        }
      }
      po[ot * sp.inner + i] = best;
      argmax[ot * sp.inner + i] = static_cast<double>(arg);
    }
  }
  std::vector<double> aux;
  aux.reserve(1 + argmax.size());
  aux.push_back(static_cast<double>(axis));
  aux.insert(aux.end(), argmax.begin(), argmax.end());
  return record1("max_axis", kMaxAxis, x, std::move(aux), std::move(out));
}

Tensor softmax_axis(const Tensor& x, std::size_t axis) {
  const AxisSplit sp = split_axis("softmax_axis", x.shape(), axis);
  if (sp.n == 0) fail("softmax_axis", "cannot normalize over empty axis");
  Tensor out = Tensor::uninitialized(x.shape());
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t ot = 0; ot < sp.outer; ++ot) {
    for (std::size_t i = 0; i < sp.inner; ++i) {
      const double* base = px + ot * sp.n * sp.inner + i;
      double* obase = po + ot * sp.n * sp.inner + i;
      double mx = base[0];
      for (std::size_t j = 1; j < sp.n; ++j) mx = std::max(mx, base[j * sp.inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < sp.n; ++j) {
        const double e = std::exp(base[j * sp.inner] - mx);
        obase[j * sp.inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < sp.n; ++j) obase[j * sp.inner] /= z;
    }
  }
  return record1("softmax_axis", kSoftmaxAxis, x, {static_cast<double>(axis)}, std::move(out));
}

// ---- shape ops -----------------------------------------------------------------

Tensor concat_axis(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) fail("concat_axis", "no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) fail("concat_axis", "axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  std::size_t total_axis = s0[axis];
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& sp = parts[p].shape();
    if (sp.size() != s0.size()) fail("concat_axis", "rank mismatch");
    for (std::size_t i = 0; i < s0.size(); ++i)
      if (i != axis && sp[i] != s0[i])
        fail("concat_axis", "shape mismatch " + shape_str(s0) + " vs " + shape_str(sp));
    total_axis += sp[axis];
  }
  out_shape[axis] = total_axis;

  const AxisSplit sp0 = split_axis("concat_axis", out_shape, axis);
  Tensor out = Tensor::uninitialized(out_shape);
  double* po = out.data();
  std::size_t offset = 0;
  for (const Tensor& part : parts) {
    const std::size_t pn = part.shape()[axis];
    const double* pp = part.data();
    for (std::size_t ot = 0; ot < sp0.outer; ++ot) {
      double* dst = po + (ot * sp0.n + offset) * sp0.inner;
      const double* src = pp + ot * pn * sp0.inner;
      std::memcpy(dst, src, pn * sp0.inner * sizeof(double));
    }
    offset += pn;
  }
  return record("concat_axis", kConcatAxis, parts, {static_cast<double>(axis)}, std::move(out));
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t stop) {
  const AxisSplit sp = split_axis("slice", x.shape(), axis);
  if (start > stop || stop > sp.n)
    fail("slice", "range [" + std::to_string(start) + "," + std::to_string(stop) +
                      ") invalid for axis extent " + std::to_string(sp.n));
  Shape out_shape = x.shape();
  out_shape[axis] = stop - start;
  Tensor out = Tensor::uninitialized(out_shape);
  const double* px = x.data();
  double* po = out.data();
  for (std::size_t ot = 0; ot < sp.outer; ++ot) {
    const double* src = px + (ot * sp.n + start) * sp.inner;
    double* dst = po + ot * (stop - start) * sp.inner;
    std::memcpy(dst, src, (stop - start) * sp.inner * sizeof(double));
  }
  return record1("slice", kSlice, x,
                 {static_cast<double>(axis), static_cast<double>(start), static_cast<double>(stop)},
                 std::move(out));
}

namespace {

// (outer, rep, inner) decomposition when all broadcast axes are consecutive;
// rep == 0 means the layout is irregular and the generic walk is needed.
struct BcastBlocks {
  std::size_t outer = 0, rep = 0, inner = 0;
};

BcastBlocks bcast_blocks(const Shape& in, const Shape& target) {
  const std::size_t rank = target.size();
  Shape padded(rank, 1);
  for (std::size_t i = 0; i < in.size(); ++i) padded[rank - in.size() + i] = in[i];
  std::size_t lo = rank, hi = 0;
  for (std::size_t i = 0; i < rank; ++i) {
    if (padded[i] == 1 && target[i] != 1) {
      lo = std::min(lo, i);
      hi = std::max(hi, i);
    } else if (padded[i] != target[i]) {
      return {};
    }
  }
  BcastBlocks b{1, 1, 1};
  if (lo == rank) {  // nothing to repeat
    for (auto d : target) b.inner *= d;
    return b;
  }
  for (std::size_t i = lo; i <= hi; ++i)
    if (padded[i] != 1) return {};  // broadcast range interrupted
  for (std::size_t i = 0; i < lo; ++i) b.outer *= target[i];
  for (std::size_t i = lo; i <= hi; ++i) b.rep *= target[i];
  for (std::size_t i = hi + 1; i < rank; ++i) b.inner *= target[i];
  return b;
}

}  // namespace

Tensor broadcast_to(const Tensor& x, const Shape& target) {
  const Shape check = broadcast_shape("broadcast", x.shape(), target);
  if (check != target)
    fail("broadcast", "cannot broadcast " + shape_str(x.shape()) + " to " + shape_str(target));
  Tensor out = Tensor::uninitialized(target);
  const double* px = x.data();
  double* po = out.data();
  const BcastBlocks blocks = bcast_blocks(x.shape(), target);
  if (blocks.rep != 0) {
    for (std::size_t o = 0; o < blocks.outer; ++o)
      for (std::size_t r = 0; r < blocks.rep; ++r)
        std::memcpy(po + (o * blocks.rep + r) * blocks.inner, px + o * blocks.inner,
                    blocks.inner * sizeof(double));
  } else {
    for_each_bcast(target, x.shape(), target,
                   [&](std::size_t o, std::size_t ix, std::size_t it) {
                     (void)it;
                     po[o] = px[ix];
                   });
  }
  return record1("broadcast", kBroadcast, x, {}, std::move(out));
}

Tensor reshape(const Tensor& x, Shape target) {
  if (numel(target) != x.size())
    fail("reshape", "cannot view " + shape_str(x.shape()) + " as " + shape_str(target));
  Tensor out = Tensor::uninitialized(std::move(target));
  std::memcpy(out.data(), x.data(), x.size() * sizeof(double));
  return record1("reshape", kReshape, x, {}, std::move(out));
}

namespace {

// Swap of the two leading axes with everything after them contiguous: a
// blocked copy instead of the per-element walk.
bool leading_swap(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2 || dims[0] != 1 || dims[1] != 0) return false;
  for (std::size_t i = 2; i < dims.size(); ++i)
    if (dims[i] != i) return false;
  return true;
}

void permute_raw(const double* px, double* po, const Shape& out_shape,
                 const std::vector<std::size_t>& src_stride) {
  const std::size_t rank = out_shape.size();
  std::vector<std::size_t> ctr(rank, 0);
  std::size_t is = 0;
  const std::size_t total = numel(out_shape);
  for (std::size_t o = 0; o < total; ++o) {
    po[o] = px[is];
    for (std::size_t d = rank; d-- > 0;) {
      ++ctr[d];
      is += src_stride[d];
      if (ctr[d] < out_shape[d]) break;
      is -= src_stride[d] * out_shape[d];
      ctr[d] = 0;
    }
  }
}

}  // namespace

Tensor permute(const Tensor& x, const std::vector<std::size_t>& dims) {
  const std::size_t rank = x.rank();
  if (dims.size() != rank) fail("permute", "dims size must equal rank");
  std::vector<bool> seen(rank, false);
  for (auto d : dims) {
    if (d >= rank || seen[d]) fail("permute", "dims must be a permutation of axes");
    seen[d] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.shape()[dims[i]];
  Tensor out = Tensor::uninitialized(out_shape);
  const double* px = x.data();
  double* po = out.data();

  if (leading_swap(dims)) {
    const std::size_t a = x.shape()[0], b = x.shape()[1];
    std::size_t inner = 1;
    for (std::size_t i = 2; i < rank; ++i) inner *= x.shape()[i];
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t i = 0; i < a; ++i)
        std::memcpy(po + (j * a + i) * inner, px + (i * b + j) * inner,
                    inner * sizeof(double));
  } else {
    std::vector<std::size_t> xstr(rank, 1);
    for (std::size_t i = rank - 1; i > 0; --i) xstr[i - 1] = xstr[i] * x.shape()[i];
    std::vector<std::size_t> src_stride(rank);
    for (std::size_t i = 0; i < rank; ++i) src_stride[i] = xstr[dims[i]];
    permute_raw(px, po, out_shape, src_stride);
  }
  std::vector<double> aux;
  for (auto d : dims) aux.push_back(static_cast<double>(d));
  return record1("permute", kPermute, x, std::move(aux), std::move(out));
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2) fail("transpose2d", "expects a 2-D tensor, got " + shape_str(x.shape()));
  return permute(x, {1, 0});
}

// ---- conveniences -----------------------------------------------------------

Tensor scale(const Tensor& x, double c) { return mul(x, Tensor::scalar(c)); }
Tensor add_scalar(const Tensor& x, double c) { return add(x, Tensor::scalar(c)); }
Tensor neg(const Tensor& x) { return sub(Tensor::scalar(0.0), x); }

Tensor softplus(const Tensor& x) {
  // log(1 + e^x) = relu(x) + log(1 + e^{-|x|}); the additive form keeps exp
  // bounded while staying inside the primitive set.
  Tensor nabs = neg(relu(x));       // -|x| for x >= 0
  Tensor nabs2 = neg(relu(neg(x))); // -|x| for x < 0
  Tensor m = add(nabs, nabs2);      // = -|x| (one term is zero)
  return add(relu(x), log(add_scalar(exp(m), 1.0)));
}

Tensor sum_all(const Tensor& x) {
  Tensor flat = reshape(x, {x.size()});
  return reshape(sum_axis(flat, 0), {});
}

Tensor mean_all(const Tensor& x) {
  if (x.size() == 0) throw AdError("mean_all: empty tensor");
  return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

// ---- backward ----------------------------------------------------------------

namespace {

template <class F>
void ew_backward(std::size_t n, F&& body) {
  if (n >= kParallelCutoff) {
    parallel_for(n, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

}  // namespace

std::unordered_map<int, Tensor> Tape::backward(const Tensor& root) const {
  if (root.tape_ != this || root.node_ < 0)
    throw AdError("backward: root is not recorded on this tape");
  if (root.size() != 1 || root.rank() != 0)
    throw AdError("backward: root must be a scalar, got " + shape_str(root.shape()));

  std::vector<Tensor> grads(nodes_.size());
  std::vector<char> has_grad(nodes_.size(), 0);
  auto grad_of = [&](int id) -> double* {
    if (!has_grad[id]) {
      grads[id] = Tensor::zeros(nodes_[id].out.shape());
      has_grad[id] = 1;
    }
    return grads[id].data();
  };
  grad_of(root.node_)[0] = 1.0;

  struct SizedView {
    const double* data;
    std::size_t n;
    std::size_t size() const { return n; }
  };

  for (std::size_t idx = nodes_.size(); idx-- > 0;) {
    const Node& node = nodes_[idx];
    if (!has_grad[idx]) continue;
    const SizedView d{grads[idx].data(), grads[idx].size()};
    const double* pd = d.data;

    auto in_grad = [&](std::size_t slot) -> double* {
      const int id = node.input_nodes[slot];
      if (id < 0) return nullptr;
      return grad_of(id);
    };

    switch (node.op) {
      case kLeaf:
        break;
      case kAdd:
      case kSub: {
        const double sign_b = node.op == kAdd ? 1.0 : -1.0;
        const Tensor& ta = node.input_values[0];
        const Tensor& tb = node.input_values[1];
        double* ga = in_grad(0);
        double* gb = in_grad(1);
        if (!ga && !gb) break;
        const std::size_t n = d.size();
        switch (classify(ta.shape(), tb.shape(), ta.size(), tb.size())) {
          case BcastKind::kSame:
            if (ga) ew_backward(n, [=](std::size_t i) { ga[i] += pd[i]; });
            if (gb) ew_backward(n, [=](std::size_t i) { gb[i] += sign_b * pd[i]; });
            break;
          case BcastKind::kScalarRhs: {
            if (ga)
              for (std::size_t i = 0; i < n; ++i) ga[i] += pd[i];
            if (gb) {
              double s = 0.0;
              for (std::size_t i = 0; i < n; ++i) s += pd[i];
              gb[0] += sign_b * s;
            }
            break;
          }
          case BcastKind::kScalarLhs: {
            if (ga) {
              double s = 0.0;
              for (std::size_t i = 0; i < n; ++i) s += pd[i];
              ga[0] += s;
            }
            if (gb)
              for (std::size_t i = 0; i < n; ++i) gb[i] += sign_b * pd[i];
            break;
          }
          case BcastKind::kSuffixRhs: {
            const std::size_t inner = tb.size();
            if (ga)
              for (std::size_t i = 0; i < n; ++i) ga[i] += pd[i];
            if (gb)
              for (std::size_t base = 0; base < n; base += inner)
                for (std::size_t i = 0; i < inner; ++i) gb[i] += sign_b * pd[base + i];
            break;
          }
          case BcastKind::kSuffixLhs: {
            const std::size_t inner = ta.size();
            if (ga)
              for (std::size_t base = 0; base < n; base += inner)
                for (std::size_t i = 0; i < inner; ++i) ga[i] += pd[base + i];
            if (gb)
              for (std::size_t i = 0; i < n; ++i) gb[i] += sign_b * pd[i];
            break;
          }
          case BcastKind::kGeneric:
            for_each_bcast(node.out.shape(), ta.shape(), tb.shape(),
                           [&](std::size_t o, std::size_t ia, std::size_t ib) {
                             if (ga) ga[ia] += pd[o];
                             if (gb) gb[ib] += sign_b * pd[o];
                           });
            break;
        }
        break;
      }
      case kMul: {
        const Tensor& ta = node.input_values[0];
        const Tensor& tb = node.input_values[1];
        const double* pa = ta.data();
        const double* pb = tb.data();
        double* ga = in_grad(0);
        double* gb = in_grad(1);
        if (!ga && !gb) break;
        const std::size_t n = d.size();
        switch (classify(ta.shape(), tb.shape(), ta.size(), tb.size())) {
          case BcastKind::kSame:
            if (ga) ew_backward(n, [=](std::size_t i) { ga[i] += pd[i] * pb[i]; });
            if (gb) ew_backward(n, [=](std::size_t i) { gb[i] += pd[i] * pa[i]; });
            break;
          case BcastKind::kScalarRhs: {
            if (ga) {
              const double s = pb[0];
              for (std::size_t i = 0; i < n; ++i) ga[i] += pd[i] * s;
            }
            if (gb) {
              double s = 0.0;
              for (std::size_t i = 0; i < n; ++i) s += pd[i] * pa[i];
              gb[0] += s;
            }
            break;
          }
          case BcastKind::kScalarLhs: {
            if (ga) {
              double s = 0.0;
              for (std::size_t i = 0; i < n; ++i) s += pd[i] * pb[i];
              ga[0] += s;
            }
            if (gb) {
              const double s = pa[0];
              for (std::size_t i = 0; i < n; ++i) gb[i] += pd[i] * s;
            }
            break;
          }
          case BcastKind::kSuffixRhs: {
            const std::size_t inner = tb.size();
            for (std::size_t base = 0; base < n; base += inner)
              for (std::size_t i = 0; i < inner; ++i) {
                if (ga) ga[base + i] += pd[base + i] * pb[i];
                if (gb) gb[i] += pd[base + i] * pa[base + i];
              }
            break;
          }
          case BcastKind::kSuffixLhs: {
            const std::size_t inner = ta.size();
            for (std::size_t base = 0; base < n; base += inner)
              for (std::size_t i = 0; i < inner; ++i) {
                if (ga) ga[i] += pd[base + i] * pb[base + i];
                if (gb) gb[base + i] += pd[base + i] * pa[i];
              }
            break;
          }
          case BcastKind::kGeneric:
            for_each_bcast(node.out.shape(), ta.shape(), tb.shape(),
                           [&](std::size_t o, std::size_t ia, std::size_t ib) {
                             if (ga) ga[ia] += pd[o] * pb[ib];
                             if (gb) gb[ib] += pd[o] * pa[ia];
                           });
            break;
        }
        break;
      }
      case kMatmul: {
        const Tensor& a = node.input_values[0];
        const Tensor& b = node.input_values[1];
        const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
        if (double* ga = in_grad(0)) matmul_grad_a(pd, b.data(), ga, m, k, n);
        if (double* gb = in_grad(1)) matmul_grad_b(a.data(), pd, gb, m, k, n);
        break;
      }
      case kRelu: {
        if (double* gx = in_grad(0)) {
          const double* px = node.input_values[0].data();
          ew_backward(d.size(), [=](std::size_t i) {
            if (px[i] > 0.0) gx[i] += pd[i];
          });
        }
        break;
      }
      case kSigmoid: {
        if (double* gx = in_grad(0)) {
          const double* py = node.out.data();
          ew_backward(d.size(), [=](std::size_t i) { gx[i] += pd[i] * py[i] * (1.0 - py[i]); });
        }
        break;
      }
      case kExp: {
        if (double* gx = in_grad(0)) {
          const double* py = node.out.data();
          ew_backward(d.size(), [=](std::size_t i) { gx[i] += pd[i] * py[i]; });
        }
        break;
      }
      case kLog: {
        if (double* gx = in_grad(0)) {
          const double* px = node.input_values[0].data();
          ew_backward(d.size(), [=](std::size_t i) { gx[i] += pd[i] / px[i]; });
        }
        break;
      }
      case kSin: {
        if (double* gx = in_grad(0)) {
          const double* px = node.input_values[0].data();
          ew_backward(d.size(), [=](std::size_t i) { gx[i] += pd[i] * std::cos(px[i]); });
        }
        break;
      }
      case kCos: {
        if (double* gx = in_grad(0)) {
          const double* px = node.input_values[0].data();
          ew_backward(d.size(), [=](std::size_t i) { gx[i] -= pd[i] * std::sin(px[i]); });
        }
        break;
      }
      case kPowConst: {
        if (double* gx = in_grad(0)) {
          const double* px = node.input_values[0].data();
          const double p = node.aux[0];
          ew_backward(d.size(), [=](std::size_t i) {
            gx[i] += pd[i] * p * std::pow(px[i], p - 1.0);
          });
        }
        break;
      }
      case kSumAxis:
      case kMeanAxis: {
        if (double* gx = in_grad(0)) {
          const auto axis = static_cast<std::size_t>(node.aux[0]);
          const AxisSplit sp = split_axis("sum_axis", node.input_values[0].shape(), axis);
          const double w = node.op == kMeanAxis ? 1.0 / static_cast<double>(sp.n) : 1.0;
          for (std::size_t ot = 0; ot < sp.outer; ++ot)
            for (std::size_t j = 0; j < sp.n; ++j)
              for (std::size_t i = 0; i < sp.inner; ++i)
                gx[(ot * sp.n + j) * sp.inner + i] += w * pd[ot * sp.inner + i];
        }
        break;
      }
      case kMaxAxis: {
        if (double* gx = in_grad(0)) {
          const auto axis = static_cast<std::size_t>(node.aux[0]);
          const AxisSplit sp = split_axis("max_axis", node.input_values[0].shape(), axis);
          for (std::size_t ot = 0; ot < sp.outer; ++ot)
            for (std::size_t i = 0; i < sp.inner; ++i) {
              const auto arg = static_cast<std::size_t>(node.aux[1 + ot * sp.inner + i]);
              gx[(ot * sp.n + arg) * sp.inner + i] += pd[ot * sp.inner + i];
            }
        }
        break;
      }
      case kSoftmaxAxis: {
        if (double* gx = in_grad(0)) {
          const auto axis = static_cast<std::size_t>(node.aux[0]);
          const AxisSplit sp = split_axis("softmax_axis", node.out.shape(), axis);
          const double* py = node.out.data();
          for (std::size_t ot = 0; ot < sp.outer; ++ot)
            for (std::size_t i = 0; i < sp.inner; ++i) {
              const std::size_t base = ot * sp.n * sp.inner + i;
              double dot = 0.0;
              for (std::size_t j = 0; j < sp.n; ++j)
                dot += pd[base + j * sp.inner] * py[base + j * sp.inner];
              for (std::size_t j = 0; j < sp.n; ++j)
                gx[base + j * sp.inner] +=
                    py[base + j * sp.inner] * (pd[base + j * sp.inner] - dot);
            }
        }
        break;
      }
      case kConcatAxis: {
        const auto axis = static_cast<std::size_t>(node.aux[0]);
        const AxisSplit sp = split_axis("concat_axis", node.out.shape(), axis);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < node.input_values.size(); ++p) {
          const std::size_t pn = node.input_values[p].shape()[axis];
          if (double* gp = in_grad(p)) {
            for (std::size_t ot = 0; ot < sp.outer; ++ot) {
              const double* src = pd + (ot * sp.n + offset) * sp.inner;
              double* dst = gp + ot * pn * sp.inner;
              for (std::size_t i = 0; i < pn * sp.inner; ++i) dst[i] += src[i];
            }
          }
          offset += pn;
        }
        break;
      }
      case kSlice: {
        if (double* gx = in_grad(0)) {
          const auto axis = static_cast<std::size_t>(node.aux[0]);
          const auto start = static_cast<std::size_t>(node.aux[1]);
          const auto stop = static_cast<std::size_t>(node.aux[2]);
          const AxisSplit sp = split_axis("slice", node.input_values[0].shape(), axis);
          for (std::size_t ot = 0; ot < sp.outer; ++ot) {
            double* dst = gx + (ot * sp.n + start) * sp.inner;
            const double* src = pd + ot * (stop - start) * sp.inner;
            for (std::size_t i = 0; i < (stop - start) * sp.inner; ++i) dst[i] += src[i];
          }
        }
        break;
      }
      case kBroadcast: {
        if (double* gx = in_grad(0)) {
          const BcastBlocks blocks =
              bcast_blocks(node.input_values[0].shape(), node.out.shape());
          if (blocks.rep != 0) {
            for (std::size_t ot = 0; ot < blocks.outer; ++ot)
              for (std::size_t r = 0; r < blocks.rep; ++r) {
                const double* src = pd + (ot * blocks.rep + r) * blocks.inner;
                double* dst = gx + ot * blocks.inner;
                for (std::size_t t = 0; t < blocks.inner; ++t) dst[t] += src[t];
              }
          } else {
            reduce_into(pd, node.out.shape(), gx, node.input_values[0].shape());
          }
        }
        break;
      }
      case kReshape: {
        if (double* gx = in_grad(0)) {
          for (std::size_t i = 0; i < d.size(); ++i) gx[i] += pd[i];
        }
        break;
      }
      case kPermute: {
        if (double* gx = in_grad(0)) {
          const std::size_t rank = node.out.rank();
          const Shape& os = node.out.shape();
          const Shape& xs = node.input_values[0].shape();
          std::vector<std::size_t> dims(rank);
          for (std::size_t i = 0; i < rank; ++i) dims[i] = static_cast<std::size_t>(node.aux[i]);
          if (leading_swap(dims)) {
            const std::size_t a = xs[0], b = xs[1];
            std::size_t inner = 1;
            for (std::size_t i = 2; i < rank; ++i) inner *= xs[i];
            for (std::size_t j = 0; j < b; ++j)
              for (std::size_t i = 0; i < a; ++i) {
                double* dst = gx + (i * b + j) * inner;
                const double* src = pd + (j * a + i) * inner;
                for (std::size_t t = 0; t < inner; ++t) dst[t] += src[t];
              }
          } else {
            std::vector<std::size_t> xstr(rank, 1);
            for (std::size_t i = rank - 1; i > 0; --i) xstr[i - 1] = xstr[i] * xs[i];
            std::vector<std::size_t> src_stride(rank);
            for (std::size_t i = 0; i < rank; ++i) src_stride[i] = xstr[dims[i]];
            std::vector<std::size_t> ctr(rank, 0);
            std::size_t is = 0;
            for (std::size_t o = 0; o < d.size(); ++o) {
              gx[is] += pd[o];
              for (std::size_t dd = rank; dd-- > 0;) {
                ++ctr[dd];
                is += src_stride[dd];
                if (ctr[dd] < os[dd]) break;
                is -= src_stride[dd] * os[dd];
                ctr[dd] = 0;
              }
            }
          }
        }
        break;
      }
      default:
        throw AdError("backward: unknown op");
    }
  }

  std::unordered_map<int, Tensor> result;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (has_grad[i]) {
      result.emplace(static_cast<int>(i), std::move(grads[i]));
    } else if (nodes_[i].op == kLeaf) {
      result.emplace(static_cast<int>(i), Tensor::zeros(nodes_[i].out.shape()));
    }
  }
  return result;
}

// ---- gradient checking ---------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw AdError("grad_check: step must be positive");

  Tape tape;
  Tensor xl(x.shape(), std::vector<double>(x.data(), x.data() + x.size()));
  tape.leaf(xl);
  Tensor y = f(xl);
  if (y.rank() != 0) throw AdError("grad_check: f must return a scalar");
  auto grads = tape.backward(y);
  const Tensor& g = grads.at(xl.node());

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp(x.shape(), std::vector<double>(x.data(), x.data() + x.size()));
    Tensor xm(x.shape(), std::vector<double>(x.data(), x.data() + x.size()));
    xp.data()[i] += h;
    xm.data()[i] -= h;
    const double fp = f(xp).item();
    const double fm = f(xm).item();
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw AdError("grad_check: f not finite at perturbed point");
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(g.at(i) - fd) / std::max(1.0, std::abs(g.at(i)));
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace sharpnerf::ad
