#pragma once

#include "vfikit/image.hpp"
#include "vfikit/tensor.hpp"

namespace vfikit {

// 10*log10(peak^2 / MSE) in dB, accumulated in double and capped at 99 (the
// cap is also the value returned for identical inputs).
double psnr(const Tensor& pred, const Tensor& gt, double peak = 1.0);
double psnr(const Image& pred, const Image& gt, double peak = 1.0);

// Single-scale structural similarity: 11x11 Gaussian window with sigma 1.5,
// C1 = (0.01*peak)^2, C2 = (0.03*peak)^2, averaged over fully-interior window
// positions, then over channels. Inputs must be at least 11x11. Tensors may
// be [H,W] or [C,H,W].
double ssim(const Tensor& pred, const Tensor& gt, double peak = 1.0);
double ssim(const Image& pred, const Image& gt, double peak = 1.0);

}  // namespace vfikit
