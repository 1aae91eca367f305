#pragma once

#include "vfikit/tensor.hpp"

namespace vfikit {

// Fixed convolutional feature stack standing in for a pretrained perceptual
// backbone: three stride-2 3x3 convolutions (3 -> 16 -> 32 -> 64 channels)
// with leaky-relu after each. Weights are drawn once from the seed and never
// updated; gradients still flow through to the image argument.
template <typename T>
struct FeatureExtractorT {
  TensorT<T> w1, b1, w2, b2, w3, b3;
  explicit FeatureExtractorT(unsigned seed = 7u);
  // [3,H,W] or [1,3,H,W] -> [1,64,ceil(H/8),ceil(W/8)]
  TensorT<T> forward(const TensorT<T>& image) const;
};
using FeatureExtractor = FeatureExtractorT<float>;
using FeatureExtractorD = FeatureExtractorT<double>;

struct LossWeights {
  enum class Phase { Early, Late };
  float lambda_r = 204.0f;
  float lambda_p = 0.005f;
  float lambda_w = 102.0f;
  float lambda_s = 1.0f;
  Phase phase = Phase::Early;

  // The late training phase drops the warping and smoothness terms.
  float warp_weight() const { return phase == Phase::Late ? 0.0f : lambda_w; }
  float smooth_weight() const { return phase == Phase::Late ? 0.0f : lambda_s; }

  static LossWeights early() { return {}; }
  static LossWeights late() {
    LossWeights w;
    w.phase = Phase::Late;
    return w;
  }
};

// Scalar (shape {1}) loss terms. Terms whose effective weight is zero may be
// left default-constructed; total_loss never touches them.
template <typename T>
struct LossPartsT {
  TensorT<T> reconstruction, perceptual, warping, smoothness;
};
using LossParts = LossPartsT<float>;
using LossPartsD = LossPartsT<double>;

// Mean absolute error over every channel and pixel.
template <typename T>
TensorT<T> reconstruction_loss(const TensorT<T>& pred, const TensorT<T>& gt);

// Root-mean-square distance between extractor features of the two frames.
// Zero when the frames match exactly; the root makes the gradient singular
// there, so callers only differentiate it at distinct inputs.
template <typename T>
TensorT<T> perceptual_loss(const TensorT<T>& pred, const TensorT<T>& gt,
                           const FeatureExtractorT<T>& phi);

// Each source frame warped to time t by its refined flow, compared to the
// reference frame in mean absolute error; the two terms are summed.
template <typename T>
TensorT<T> warping_loss(const TensorT<T>& i_t, const TensorT<T>& i0, const TensorT<T>& i1,
                        const TensorT<T>& fr_t0, const TensorT<T>& fr_t1);

// Anisotropic total variation of both refined flows: absolute forward
// differences along x and along y, each summed over the pairs that exist and
// divided by the full element count of the flow. A slope-1 ramp on every
// channel therefore scores (W-1)/W, not 1.
template <typename T>
TensorT<T> smoothness_loss(const TensorT<T>& fr_t0, const TensorT<T>& fr_t1);

// Weighted sum of the four parts under the phase-adjusted weights. Terms with
// a zero effective weight are left out of the autodiff graph entirely, so the
// late phase carries no warping or smoothness gradient at all.
template <typename T>
TensorT<T> total_loss(const LossPartsT<T>& parts, const LossWeights& w);

}  // namespace vfikit
