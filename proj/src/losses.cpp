#include "vfikit/losses.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/motion.hpp"

namespace vfikit {
namespace {

constexpr float kSlope = 0.1f;

// Weights are drawn in float regardless of T so the float and double
// extractors hold identical values.
template <typename T>
TensorT<T> frozen_he(std::mt19937& rng, std::vector<std::int64_t> shape) {
  std::int64_t fan_in = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
  std::int64_t n = 1;
  for (std::int64_t s : shape) n *= s;
  std::vector<T> d(static_cast<std::size_t>(n));
  for (T& v : d) v = static_cast<T>(dist(rng));
  return TensorT<T>::from_vector(std::move(shape), std::move(d));
}

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         detail::shape_str(a.shape()) + " vs " + detail::shape_str(b.shape()));
  }
}

}  // namespace

template <typename T>
FeatureExtractorT<T>::FeatureExtractorT(unsigned seed) {
  std::mt19937 rng(seed);
  w1 = frozen_he<T>(rng, {16, 3, 3, 3});
  b1 = TensorT<T>::zeros({16});
  w2 = frozen_he<T>(rng, {32, 16, 3, 3});
  b2 = TensorT<T>::zeros({32});
  w3 = frozen_he<T>(rng, {64, 32, 3, 3});
  b3 = TensorT<T>::zeros({64});
}

template <typename T>
TensorT<T> FeatureExtractorT<T>::forward(const TensorT<T>& image) const {
  TensorT<T> x = image;
  if (x.ndim() == 3) {
    x = reshape(x, {1, x.shape()[0], x.shape()[1], x.shape()[2]});
  }
  if (x.ndim() != 4 || x.shape()[1] != 3) {
    throw DimensionError("feature extractor expects a 3-channel image, got " +
                         detail::shape_str(image.shape()));
  }
  x = leaky_relu(conv2d(x, w1, b1, 2, 1), static_cast<T>(kSlope));
  x = leaky_relu(conv2d(x, w2, b2, 2, 1), static_cast<T>(kSlope));
  x = leaky_relu(conv2d(x, w3, b3, 2, 1), static_cast<T>(kSlope));
  return x;
}

template <typename T>
TensorT<T> reconstruction_loss(const TensorT<T>& pred, const TensorT<T>& gt) {
  check_same_shape(pred, gt, "reconstruction_loss");
  return mean(abs_elem(sub(pred, gt)));
}

template <typename T>
TensorT<T> perceptual_loss(const TensorT<T>& pred, const TensorT<T>& gt,
                           const FeatureExtractorT<T>& phi) {
  check_same_shape(pred, gt, "perceptual_loss");
  TensorT<T> d = sub(phi.forward(pred), phi.forward(gt));
  return sqrt_elem(mean(mul(d, d)));
}

template <typename T>
TensorT<T> warping_loss(const TensorT<T>& i_t, const TensorT<T>& i0, const TensorT<T>& i1,
                        const TensorT<T>& fr_t0, const TensorT<T>& fr_t1) {
  check_same_shape(i_t, i0, "warping_loss");
  check_same_shape(i_t, i1, "warping_loss");
  TensorT<T> term0 = mean(abs_elem(sub(i_t, backward_warp(i0, fr_t0))));
  TensorT<T> term1 = mean(abs_elem(sub(i_t, backward_warp(i1, fr_t1))));
  return add(term0, term1);
}

namespace {

template <typename T>
TensorT<T> tv_term(const TensorT<T>& flow) {
  if (flow.ndim() != 3) {
    throw DimensionError("smoothness_loss expects [C,H,W] flows, got " +
                         detail::shape_str(flow.shape()));
  }
  const std::int64_t h = flow.shape()[1];
  const std::int64_t w = flow.shape()[2];
  const T inv_n = T(1) / static_cast<T>(flow.numel());
  TensorT<T> out = TensorT<T>::zeros({1});
  if (w > 1) {
    TensorT<T> dx = sub(slice(flow, 2, 1, w - 1), slice(flow, 2, 0, w - 1));
    out = add(out, scale(sum(abs_elem(dx)), inv_n));
  }
  if (h > 1) {
    TensorT<T> dy = sub(slice(flow, 1, 1, h - 1), slice(flow, 1, 0, h - 1));
    out = add(out, scale(sum(abs_elem(dy)), inv_n));
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> smoothness_loss(const TensorT<T>& fr_t0, const TensorT<T>& fr_t1) {
  return add(tv_term(fr_t0), tv_term(fr_t1));
}

template <typename T>
TensorT<T> total_loss(const LossPartsT<T>& parts, const LossWeights& w) {
  TensorT<T> out = TensorT<T>::zeros({1});
  if (w.lambda_r > 0.0f) out = add(out, scale(parts.reconstruction, static_cast<T>(w.lambda_r)));
  if (w.lambda_p > 0.0f) out = add(out, scale(parts.perceptual, static_cast<T>(w.lambda_p)));
  if (w.warp_weight() > 0.0f) out = add(out, scale(parts.warping, static_cast<T>(w.warp_weight())));
  if (w.smooth_weight() > 0.0f) {
    out = add(out, scale(parts.smoothness, static_cast<T>(w.smooth_weight())));
  }
  return out;
}

#define VFIKIT_INSTANTIATE_LOSSES(T)                                                  \
  template struct FeatureExtractorT<T>;                                              \
  template TensorT<T> reconstruction_loss(const TensorT<T>&, const TensorT<T>&);     \
  template TensorT<T> perceptual_loss(const TensorT<T>&, const TensorT<T>&,          \
                                      const FeatureExtractorT<T>&);                  \
  template TensorT<T> warping_loss(const TensorT<T>&, const TensorT<T>&,             \
                                   const TensorT<T>&, const TensorT<T>&,             \
                                   const TensorT<T>&);                               \
  template TensorT<T> smoothness_loss(const TensorT<T>&, const TensorT<T>&);         \
  template TensorT<T> total_loss(const LossPartsT<T>&, const LossWeights&);

VFIKIT_INSTANTIATE_LOSSES(float)
VFIKIT_INSTANTIATE_LOSSES(double)

#undef VFIKIT_INSTANTIATE_LOSSES

}  // namespace vfikit
