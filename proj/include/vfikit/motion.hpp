#pragma once

#include <utility>

#include "vfikit/image.hpp"
#include "vfikit/tensor.hpp"

namespace vfikit {

// Per-pixel quadratic motion model, one (alpha, beta) pair per anchor frame:
//   from frame 0:  F_{0->t} = alpha0 * t     + beta0 * t^2
//   from frame 1:  F_{1->t} = alpha1 * (1-t) + beta1 * (1-t)^2
// Each map is a [2,H,W] tensor (x-rate plane, then y-rate plane).
template <typename T>
struct MotionCoeffsT {
  TensorT<T> alpha0, beta0, alpha1, beta1;
};
using MotionCoeffs = MotionCoeffsT<float>;
using MotionCoeffsD = MotionCoeffsT<double>;

// Shared scalar evaluation path. The ground-truth generator and the flow
// evaluator both go through this exact expression (alpha*s, then beta*(s*s),
// then the sum) so their float results agree bitwise; the whole library is
// built with FP contraction off to keep it that way across translation units.
template <typename T>
constexpr T quad_displacement(T alpha, T beta, T s) {
  return alpha * s + beta * (s * s);
}

// Differentiable flow evaluation. anchor 0 uses s = t, anchor 1 uses
// s = 1 - t. ContractError unless 0 < t < 1 (the unchecked variant accepts
// the closed interval for boundary-limit checks).
template <typename T>
TensorT<T> eval_quadratic_flow(const MotionCoeffsT<T>& coeffs, T t, int anchor);
template <typename T>
TensorT<T> eval_quadratic_flow_unchecked(const MotionCoeffsT<T>& coeffs, T t, int anchor);
FlowField eval_quadratic_flow_field(const MotionCoeffs& coeffs, float t, int anchor);

// Closed-form coefficients from two flows leaving the same anchor one time
// unit apart in opposite directions: alpha = (fwd - bwd)/2, beta =
// (fwd + bwd)/2. Anchor 0 takes (F_{0->1}, F_{0->-1}); anchor 1 takes
// (F_{1->0}, F_{1->2}).
struct AnalyticCoeffPair {
  FlowField alpha, beta;
};
AnalyticCoeffPair analytic_coeffs(const FlowField& f_fwd, const FlowField& f_bwd_time);
MotionCoeffs analytic_coeffs_full(const FlowField& f01, const FlowField& f0m1,
                                  const FlowField& f10, const FlowField& f12);

// Reverses flow direction by splatting: each source pixel p lands at
// q = p + F(p) and distributes -F(p) to the four integer pixels of the cell
// containing q, weighted by exp(-|x - q|^2); each output pixel is the
// weighted average of what landed on it. Pixels reached by nothing become
// (0,0) and are flagged in holes. Differentiable w.r.t. the input flow with
// the 2x2 cell membership held fixed.
template <typename T>
TensorT<T> reverse_flow(const TensorT<T>& flow, HoleMask* holes = nullptr);
std::pair<FlowField, HoleMask> reverse_flow(const FlowField& flow);

// F'(x) = F(x + offset(x)) + residual(x), bilinear with border clamp.
// All three arguments are [2,H,W]; differentiable in all of them.
template <typename T>
TensorT<T> apply_refinement(const TensorT<T>& flow, const TensorT<T>& offsets,
                            const TensorT<T>& residuals);

// out(x) = image sampled at x + flow(x), bilinear with border clamp.
template <typename T>
TensorT<T> backward_warp(const TensorT<T>& image, const TensorT<T>& flow);
Image backward_warp(const Image& image, const FlowField& flow);

// Occlusion-weighted blend of the two warped frames:
//   [(1-t) M bw(I0,F0) + t (1-M) bw(I1,F1)] / [(1-t) M + t (1-M) + 1e-12]
// mask is [1,H,W] in [0,1], images are [C,H,W]. ContractError unless
// 0 < t < 1.
template <typename T>
TensorT<T> synthesize_frame(const TensorT<T>& i0, const TensorT<T>& i1, const TensorT<T>& fr_t0,
                            const TensorT<T>& fr_t1, const TensorT<T>& mask, T t);

}  // namespace vfikit
