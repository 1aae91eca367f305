#include "vfikit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace vfikit {

namespace detail {

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

static std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw DimensionError("tensor dims must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

}  // namespace detail

// ---- TensorT ----

template <typename T>
TensorT<T>::TensorT(std::vector<std::int64_t> shape, T fill) {
  const std::int64_t n = detail::shape_numel(shape);
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data.assign(static_cast<std::size_t>(n), fill);
}

template <typename T>
TensorT<T> TensorT<T>::zeros(std::vector<std::int64_t> shape) {
  return TensorT(std::move(shape), T(0));
}

template <typename T>
TensorT<T> TensorT<T>::full(std::vector<std::int64_t> shape, T value) {
  return TensorT(std::move(shape), value);
}

template <typename T>
TensorT<T> TensorT<T>::from_vector(std::vector<std::int64_t> shape, std::vector<T> values) {
  const std::int64_t n = detail::shape_numel(shape);
  if (n != static_cast<std::int64_t>(values.size())) {
    throw DimensionError("from_vector: " + detail::shape_str(shape) + " holds " + std::to_string(n) +
                         " values, got " + std::to_string(values.size()));
  }
  TensorT t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::move(values);
  return t;
}

template <typename T>
TensorT<T> TensorT<T>::scalar(T value) {
  return from_vector({1}, {value});
}

template <typename T>
typename TensorT<T>::Impl& TensorT<T>::impl() {
  if (!impl_) throw ContractError("use of undefined tensor");
  return *impl_;
}

template <typename T>
const typename TensorT<T>::Impl& TensorT<T>::impl() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return *impl_;
}

template <typename T>
const std::vector<std::int64_t>& TensorT<T>::shape() const {
  return impl().shape;
}

template <typename T>
int TensorT<T>::ndim() const {
  return static_cast<int>(impl().shape.size());
}

template <typename T>
std::int64_t TensorT<T>::dim(int i) const {
  const auto& s = impl().shape;
  if (i < 0) i += static_cast<int>(s.size());
  if (i < 0 || i >= static_cast<int>(s.size())) throw DimensionError("dim index out of range");
  return s[static_cast<std::size_t>(i)];
}

template <typename T>
std::int64_t TensorT<T>::numel() const {
  return static_cast<std::int64_t>(impl().data.size());
}

template <typename T>
T* TensorT<T>::data() {
  return impl().data.data();
}

template <typename T>
const T* TensorT<T>::data() const {
  return impl().data.data();
}

template <typename T>
T& TensorT<T>::operator[](std::int64_t flat) {
  return impl().data[static_cast<std::size_t>(flat)];
}

template <typename T>
T TensorT<T>::operator[](std::int64_t flat) const {
  return impl().data[static_cast<std::size_t>(flat)];
}

template <typename T>
T TensorT<T>::item() const {
  if (numel() != 1) {
    throw ContractError("item() requires a scalar tensor, shape is " + detail::shape_str(shape()));
  }
  return impl().data[0];
}

template <typename T>
bool TensorT<T>::requires_grad() const {
  return impl_ && impl_->requires_grad;
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool value) {
  impl().requires_grad = value;
  return *this;
}

template <typename T>
bool TensorT<T>::has_grad() const {
  return impl_ && !impl_->grad.empty();
}

template <typename T>
T* TensorT<T>::grad_data() {
  auto& g = impl().grad;
  return g.empty() ? nullptr : g.data();
}

template <typename T>
const T* TensorT<T>::grad_data() const {
  const auto& g = impl().grad;
  return g.empty() ? nullptr : g.data();
}

template <typename T>
TensorT<T> TensorT<T>::grad() const {
  TensorT g = zeros(shape());
  if (has_grad()) std::copy(impl().grad.begin(), impl().grad.end(), g.data());
  return g;
}

template <typename T>
void TensorT<T>::zero_grad() {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
void TensorT<T>::accumulate_grad(const T* g, std::int64_t n) const {
  if (!impl_) throw ContractError("use of undefined tensor");
  auto& im = *impl_;
  if (n != static_cast<std::int64_t>(im.data.size())) {
    throw DimensionError("gradient size mismatch: " + std::to_string(n) + " vs " +
                         std::to_string(im.data.size()));
  }
  if (im.grad.empty()) im.grad.assign(im.data.size(), T(0));
  for (std::int64_t i = 0; i < n; ++i) im.grad[static_cast<std::size_t>(i)] += g[i];
}

template <typename T>
TensorT<T> TensorT<T>::detached_copy() const {
  TensorT t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = impl().shape;
  t.impl_->data = impl().data;
  return t;
}

// ---- TapeT ----

namespace {
template <typename T>
TapeT<T>*& active_tape_slot() {
  thread_local TapeT<T>* slot = nullptr;
  return slot;
}
}  // namespace

template <typename T>
TapeT<T>::TapeT() {
  previous_ = active_tape_slot<T>();
  active_tape_slot<T>() = this;
}

template <typename T>
TapeT<T>::~TapeT() {
  active_tape_slot<T>() = previous_;
}

template <typename T>
TapeT<T>* TapeT<T>::active() {
  return active_tape_slot<T>();
}

template <typename T>
void TapeT<T>::record(std::function<void()> backward_step) {
  nodes_.push_back(std::move(backward_step));
}

template <typename T>
void TapeT<T>::backward(const TensorT<T>& loss) {
  if (consumed_) throw ContractError("tape already consumed; one backward() per tape");
  if (loss.numel() != 1) {
    throw ContractError("backward() requires a scalar loss, shape is " +
                        detail::shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("loss does not require grad; it is not reachable from this tape");
  }
  consumed_ = true;
  const T one(1);
  loss.accumulate_grad(&one, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

// ---- op helpers ----

namespace {

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + detail::shape_str(a.shape()) +
                         " vs " + detail::shape_str(b.shape()));
  }
}

// Shared skeleton for unary elementwise ops. dfn(x, y) returns dy/dx given
// input value x and output value y.
template <typename T, typename Fwd, typename Dfn>
TensorT<T> unary_op(const TensorT<T>& a, Fwd fwd, Dfn dfn) {
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  T* op = out.data();
  for (std::int64_t i = 0; i < n; ++i) op[i] = fwd(ap[i]);
  out.set_requires_grad(a.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, out, dfn]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = a.numel();
      std::vector<T> ga(static_cast<std::size_t>(n));
      const T* ap = a.data();
      const T* op = out.data();
      for (std::int64_t i = 0; i < n; ++i) ga[static_cast<std::size_t>(i)] = g[i] * dfn(ap[i], op[i]);
      a.accumulate_grad(ga.data(), n);
    });
  }
  return out;
}

}  // namespace

// ---- elementwise ----

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "add");
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  const T* bp = b.data();
  T* op = out.data();
  for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] + bp[i];
  out.set_requires_grad(a.requires_grad() || b.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, b, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = out.numel();
      if (a.requires_grad()) a.accumulate_grad(g, n);
      if (b.requires_grad()) b.accumulate_grad(g, n);
    });
  }
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "sub");
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  const T* bp = b.data();
  T* op = out.data();
  for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] - bp[i];
  out.set_requires_grad(a.requires_grad() || b.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, b, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = out.numel();
      if (a.requires_grad()) a.accumulate_grad(g, n);
      if (b.requires_grad()) {
        std::vector<T> gb(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) gb[static_cast<std::size_t>(i)] = -g[i];
        b.accumulate_grad(gb.data(), n);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "mul");
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  const T* bp = b.data();
  T* op = out.data();
  for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] * bp[i];
  out.set_requires_grad(a.requires_grad() || b.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, b, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = out.numel();
      std::vector<T> buf(static_cast<std::size_t>(n));
      if (a.requires_grad()) {
        const T* bp = b.data();
        for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = g[i] * bp[i];
        a.accumulate_grad(buf.data(), n);
      }
      if (b.requires_grad()) {
        const T* ap = a.data();
        for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = g[i] * ap[i];
        b.accumulate_grad(buf.data(), n);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "div");
  TensorT<T> out = TensorT<T>::zeros(a.shape());
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  const T* bp = b.data();
  T* op = out.data();
  for (std::int64_t i = 0; i < n; ++i) op[i] = ap[i] / bp[i];
  out.set_requires_grad(a.requires_grad() || b.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, b, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = out.numel();
      const T* bp = b.data();
      std::vector<T> buf(static_cast<std::size_t>(n));
      if (a.requires_grad()) {
        for (std::int64_t i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = g[i] / bp[i];
        a.accumulate_grad(buf.data(), n);
      }
      if (b.requires_grad()) {
        const T* op = out.data();
        for (std::int64_t i = 0; i < n; ++i)
          buf[static_cast<std::size_t>(i)] = -g[i] * op[i] / bp[i];
        b.accumulate_grad(buf.data(), n);
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T factor) {
  return unary_op(
      a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T value) {
  return unary_op(
      a, [value](T x) { return x + value; }, [](T, T) { return T(1); });
}

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& a, T slope) {
  return unary_op(
      a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
  return unary_op(
      a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
TensorT<T> abs_elem(const TensorT<T>& a) {
  return unary_op(
      a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
TensorT<T> sqrt_elem(const TensorT<T>& a) {
  return unary_op(
      a, [](T x) { return std::sqrt(x); },
      [](T, T y) { return T(0.5) / y; });
}

// ---- reductions ----

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
  T acc(0);
  const std::int64_t n = a.numel();
  const T* ap = a.data();
  for (std::int64_t i = 0; i < n; ++i) acc += ap[i];
  TensorT<T> out = TensorT<T>::scalar(acc);
  out.set_requires_grad(a.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t n = a.numel();
      std::vector<T> ga(static_cast<std::size_t>(n), g[0]);
      a.accumulate_grad(ga.data(), n);
    });
  }
  return out;
}

template <typename T>
TensorT<T> mean(const TensorT<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.numel()));
}

// ---- shape ops ----

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, std::vector<std::int64_t> shape) {
  TensorT<T> out = TensorT<T>::zeros(std::move(shape));
  if (out.numel() != a.numel()) {
    throw DimensionError("reshape: element count mismatch " + detail::shape_str(a.shape()) +
                         " -> " + detail::shape_str(out.shape()));
  }
  std::copy(a.data(), a.data() + a.numel(), out.data());
  out.set_requires_grad(a.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, out]() mutable {
      const T* g = out.grad_data();
      if (g) a.accumulate_grad(g, a.numel());
    });
  }
  return out;
}

namespace {
// Collapse a shape around `dim` into (outer, extent, inner) so slice/concat
// reduce to strided block copies.
struct DimSplit {
  std::int64_t outer = 1, extent = 1, inner = 1;
};
DimSplit split_around(const std::vector<std::int64_t>& shape, int dim) {
  DimSplit s;
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    const auto d = shape[static_cast<std::size_t>(i)];
    if (i < dim) s.outer *= d;
    else if (i == dim) s.extent = d;
    else s.inner *= d;
  }
  return s;
}
}  // namespace

template <typename T>
TensorT<T> slice(const TensorT<T>& a, int dim, std::int64_t start, std::int64_t length) {
  const auto& shape = a.shape();
  if (dim < 0 || dim >= static_cast<int>(shape.size())) throw DimensionError("slice: bad dim");
  const std::int64_t extent = shape[static_cast<std::size_t>(dim)];
  if (start < 0 || length <= 0 || start + length > extent) {
    throw DimensionError("slice: range [" + std::to_string(start) + "," +
                         std::to_string(start + length) + ") outside extent " +
                         std::to_string(extent));
  }
  std::vector<std::int64_t> out_shape = shape;
  out_shape[static_cast<std::size_t>(dim)] = length;
  TensorT<T> out = TensorT<T>::zeros(out_shape);

  const DimSplit s = split_around(shape, dim);
  const T* ap = a.data();
  T* op = out.data();
  for (std::int64_t o = 0; o < s.outer; ++o) {
    const T* src = ap + (o * s.extent + start) * s.inner;
    T* dst = op + o * length * s.inner;
    std::copy(src, src + length * s.inner, dst);
  }
  out.set_requires_grad(a.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, out, s, start, length]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      std::vector<T> ga(static_cast<std::size_t>(a.numel()), T(0));
      for (std::int64_t o = 0; o < s.outer; ++o) {
        T* dst = ga.data() + (o * s.extent + start) * s.inner;
        const T* src = g + o * length * s.inner;
        for (std::int64_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
      }
      a.accumulate_grad(ga.data(), a.numel());
    });
  }
  return out;
}

template <typename T>
TensorT<T> concat(const std::vector<TensorT<T>>& parts, int dim) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const auto& first_shape = parts.front().shape();
  if (dim < 0 || dim >= static_cast<int>(first_shape.size())) throw DimensionError("concat: bad dim");
  std::int64_t total = 0;
  for (const auto& p : parts) {
    if (p.ndim() != static_cast<int>(first_shape.size())) throw DimensionError("concat: rank mismatch");
    for (int i = 0; i < p.ndim(); ++i) {
      if (i != dim && p.dim(i) != first_shape[static_cast<std::size_t>(i)]) {
        throw DimensionError("concat: shape mismatch at dim " + std::to_string(i));
      }
    }
    total += p.dim(dim);
  }
  std::vector<std::int64_t> out_shape = first_shape;
  out_shape[static_cast<std::size_t>(dim)] = total;
  TensorT<T> out = TensorT<T>::zeros(out_shape);

  const DimSplit so = split_around(out_shape, dim);
  T* op = out.data();
  std::int64_t offset = 0;
  bool any_grad = false;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    const std::int64_t len = p.dim(dim);
    const T* pp = p.data();
    for (std::int64_t o = 0; o < so.outer; ++o) {
      T* dst = op + (o * so.extent + offset) * so.inner;
      const T* src = pp + o * len * so.inner;
      std::copy(src, src + len * so.inner, dst);
    }
    offsets.push_back(offset);
    offset += len;
    any_grad = any_grad || p.requires_grad();
  }
  out.set_requires_grad(any_grad);
  if (detail::tracing<T>(out.requires_grad())) {
    std::vector<TensorT<T>> held = parts;
    TapeT<T>::active()->record([held, out, so, offsets]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      for (std::size_t pi = 0; pi < held.size(); ++pi) {
        auto& p = held[pi];
        if (!p.requires_grad()) continue;
        const std::int64_t plen = p.numel() / (so.outer * so.inner);
        std::vector<T> gp(static_cast<std::size_t>(p.numel()));
        for (std::int64_t o = 0; o < so.outer; ++o) {
          const T* src = g + (o * so.extent + offsets[pi]) * so.inner;
          T* dst = gp.data() + o * plen * so.inner;
          std::copy(src, src + plen * so.inner, dst);
        }
        p.accumulate_grad(gp.data(), p.numel());
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> transpose_hwc(const TensorT<T>& a) {
  if (a.ndim() != 3) throw DimensionError("transpose_hwc: want [C,H,W]");
  const std::int64_t C = a.dim(0), H = a.dim(1), W = a.dim(2);
  TensorT<T> out = TensorT<T>::zeros({H, W, C});
  const T* ap = a.data();
  T* op = out.data();
  for (std::int64_t c = 0; c < C; ++c)
    for (std::int64_t y = 0; y < H; ++y)
      for (std::int64_t x = 0; x < W; ++x) op[(y * W + x) * C + c] = ap[(c * H + y) * W + x];
  out.set_requires_grad(a.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([a, out, C, H, W]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      std::vector<T> ga(static_cast<std::size_t>(a.numel()));
      for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t y = 0; y < H; ++y)
          for (std::int64_t x = 0; x < W; ++x)
            ga[static_cast<std::size_t>((c * H + y) * W + x)] = g[(y * W + x) * C + c];
      a.accumulate_grad(ga.data(), a.numel());
    });
  }
  return out;
}

// ---- explicit instantiations ----

#define VFIKIT_INSTANTIATE_TENSOR(T)                                                              \
  template class TensorT<T>;                                                                      \
  template class TapeT<T>;                                                                        \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> sub(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> mul(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> div(const TensorT<T>&, const TensorT<T>&);                                  \
  template TensorT<T> scale(const TensorT<T>&, T);                                                \
  template TensorT<T> add_scalar(const TensorT<T>&, T);                                           \
  template TensorT<T> leaky_relu(const TensorT<T>&, T);                                           \
  template TensorT<T> sigmoid(const TensorT<T>&);                                                 \
  template TensorT<T> abs_elem(const TensorT<T>&);                                                \
  template TensorT<T> sqrt_elem(const TensorT<T>&);                                               \
  template TensorT<T> sum(const TensorT<T>&);                                                     \
  template TensorT<T> mean(const TensorT<T>&);                                                    \
  template TensorT<T> reshape(const TensorT<T>&, std::vector<std::int64_t>);                      \
  template TensorT<T> slice(const TensorT<T>&, int, std::int64_t, std::int64_t);                  \
  template TensorT<T> concat(const std::vector<TensorT<T>>&, int);                                \
  template TensorT<T> transpose_hwc(const TensorT<T>&);

VFIKIT_INSTANTIATE_TENSOR(float)
VFIKIT_INSTANTIATE_TENSOR(double)

#undef VFIKIT_INSTANTIATE_TENSOR

}  // namespace vfikit
