#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vfikit/errors.hpp"

namespace vfikit {

// Dense row-major N-D tensor with shared-storage handle semantics.
// Copying a TensorT copies the handle: both copies see the same data and
// the same gradient accumulator. float is the compute type for training
// and inference; double instantiations exist for finite-difference checks.
template <typename T>
class TensorT {
 public:
  using value_type = T;

  TensorT() = default;
  explicit TensorT(std::vector<std::int64_t> shape, T fill = T(0));

  static TensorT zeros(std::vector<std::int64_t> shape);
  static TensorT full(std::vector<std::int64_t> shape, T value);
  static TensorT from_vector(std::vector<std::int64_t> shape, std::vector<T> values);
  static TensorT scalar(T value);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::int64_t>& shape() const;
  int ndim() const;
  std::int64_t dim(int i) const;
  std::int64_t numel() const;

  T* data();
  const T* data() const;
  T& operator[](std::int64_t flat);
  T operator[](std::int64_t flat) const;
  // Scalar extraction; ContractError unless numel()==1.
  T item() const;

  bool requires_grad() const;
  TensorT& set_requires_grad(bool value);

  // Gradient accumulator. Allocated lazily by accumulate_grad; grad_data()
  // is null until then.
  bool has_grad() const;
  T* grad_data();
  const T* grad_data() const;
  TensorT grad() const;  // copy of grad as a plain tensor (zeros if unset)
  void zero_grad();
  // const because it mutates the shared Impl, not the handle; backward
  // closures hold tensors captured from const references.
  void accumulate_grad(const T* g, std::int64_t n) const;

  bool same_storage(const TensorT& other) const { return impl_ == other.impl_; }

  // Deep copy of values; result does not require grad and shares nothing.
  TensorT detached_copy() const;

 private:
  struct Impl {
    std::vector<std::int64_t> shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  Impl& impl();
  const Impl& impl() const;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Records the backward pass of every differentiable operation executed while
// it is the innermost active tape on the current thread. Construction
// activates the tape; destruction deactivates it. backward() may be called
// exactly once per tape: it seeds d(loss)/d(loss)=1 and replays the recorded
// closures in reverse, adding into each reachable tensor's grad accumulator.
// Gradients therefore accumulate across tapes until zero_grad() is called on
// the tensors, which is the contract mini-batch accumulation relies on.
template <typename T>
class TapeT {
 public:
  TapeT();
  ~TapeT();
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  static TapeT* active();

  void record(std::function<void()> backward_step);
  std::size_t node_count() const { return nodes_.size(); }

  // ContractError if loss is not scalar, does not require grad, or the tape
  // was already consumed by a previous backward().
  void backward(const TensorT<T>& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  TapeT* previous_ = nullptr;
  bool consumed_ = false;
};

using Tape = TapeT<float>;
using TapeD = TapeT<double>;

namespace detail {
// True when an op executed right now should push a backward node.
template <typename T>
bool tracing(bool out_requires_grad) {
  return out_requires_grad && TapeT<T>::active() != nullptr;
}
std::string shape_str(const std::vector<std::int64_t>& shape);
}  // namespace detail

// ---- elementwise suite ----
template <typename T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);
// Elementwise a/b; caller keeps b away from zero where gradients matter.
template <typename T> TensorT<T> div(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> scale(const TensorT<T>& a, T factor);
template <typename T> TensorT<T> add_scalar(const TensorT<T>& a, T value);
template <typename T> TensorT<T> leaky_relu(const TensorT<T>& a, T slope);
template <typename T> TensorT<T> sigmoid(const TensorT<T>& a);
template <typename T> TensorT<T> abs_elem(const TensorT<T>& a);
// Elementwise square root; inputs must be strictly positive where gradients
// are needed.
template <typename T> TensorT<T> sqrt_elem(const TensorT<T>& a);

// ---- reductions ----
template <typename T> TensorT<T> sum(const TensorT<T>& a);
template <typename T> TensorT<T> mean(const TensorT<T>& a);

// ---- shape ops ----
template <typename T> TensorT<T> reshape(const TensorT<T>& a, std::vector<std::int64_t> shape);
template <typename T> TensorT<T> slice(const TensorT<T>& a, int dim, std::int64_t start, std::int64_t length);
template <typename T> TensorT<T> concat(const std::vector<TensorT<T>>& parts, int dim);
// [C,H,W] -> [H,W,C]; pairs planar channel maps with the interleaved layout
// grid_sample_bilinear expects for its coordinate argument.
template <typename T> TensorT<T> transpose_hwc(const TensorT<T>& a);

// ---- convolution / pooling / resampling ----

// Cross-correlation (no kernel flip). input [B,C,H,W], weight [K,C,kh,kw]
// with kh,kw odd, bias [K]. H' = (H + 2*padding - kh)/stride + 1.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride = 1, int padding = 0);

// input [B,C,D,H,W], weight [K,C,kt,kh,kw] with kh,kw odd; kt may be even so
// an output head can collapse the temporal extent without padding. Scalar
// stride/padding apply to all three axes; the array form is (t,h,w).
template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride = 1, int padding = 0);
template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  std::array<int, 3> stride, std::array<int, 3> padding);

// 2x2 spatial max pooling, stride 2, on [B,C,H,W] or [B,C,D,H,W]; the
// temporal axis of 5-D inputs passes through. H and W must be even. Backward
// routes the gradient to the first maximum in row-major window order.
template <typename T> TensorT<T> maxpool_spatial(const TensorT<T>& input);

// Bilinear upsampling of H,W by an integer factor, half-pixel-centers
// convention (align_corners=false), on 4-D or 5-D inputs.
template <typename T> TensorT<T> resize_bilinear(const TensorT<T>& input, int scale = 2);

// image [C,H,W], coords [H',W',2] holding absolute pixel positions (x,y).
// Out-of-range positions clamp to the border. Differentiable in both image
// and coords.
template <typename T>
TensorT<T> grid_sample_bilinear(const TensorT<T>& image, const TensorT<T>& coords);

}  // namespace vfikit
