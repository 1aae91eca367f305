#include "vfikit/motion.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace vfikit {

namespace {

template <typename T>
void check_coeffs(const MotionCoeffsT<T>& c) {
  const TensorT<T>* maps[4] = {&c.alpha0, &c.beta0, &c.alpha1, &c.beta1};
  for (const auto* m : maps) {
    if (!m->defined()) throw ContractError("motion coeffs: undefined map");
    if (m->ndim() != 3 || m->dim(0) != 2) {
      throw DimensionError("motion coeffs: maps must be [2,H,W], got " +
                           detail::shape_str(m->shape()));
    }
    if (m->shape() != c.alpha0.shape()) {
      throw DimensionError("motion coeffs: maps disagree on shape");
    }
  }
}

template <typename T>
void check_flow_tensor(const TensorT<T>& f, const char* what) {
  if (f.ndim() != 3 || f.dim(0) != 2) {
    throw DimensionError(std::string(what) + ": want [2,H,W], got " + detail::shape_str(f.shape()));
  }
}

// Constant interleaved (x, y) pixel grid for sampling ops.
template <typename T>
TensorT<T> base_grid(std::int64_t H, std::int64_t W) {
  TensorT<T> g({H, W, 2});
  T* d = g.data();
  for (std::int64_t y = 0; y < H; ++y)
    for (std::int64_t x = 0; x < W; ++x) {
      *d++ = static_cast<T>(x);
      *d++ = static_cast<T>(y);
    }
  return g;
}

}  // namespace

template <typename T>
TensorT<T> eval_quadratic_flow_unchecked(const MotionCoeffsT<T>& coeffs, T t, int anchor) {
  check_coeffs(coeffs);
  if (anchor != 0 && anchor != 1) throw ContractError("eval_quadratic_flow: anchor must be 0 or 1");
  const T s = anchor == 0 ? t : T(1) - t;
  const TensorT<T>& alpha = anchor == 0 ? coeffs.alpha0 : coeffs.alpha1;
  const TensorT<T>& beta = anchor == 0 ? coeffs.beta0 : coeffs.beta1;
  // Same rounding sequence as quad_displacement: alpha*s, beta*(s*s), sum.
  return add(scale(alpha, s), scale(beta, s * s));
}

template <typename T>
TensorT<T> eval_quadratic_flow(const MotionCoeffsT<T>& coeffs, T t, int anchor) {
  if (!(t > T(0) && t < T(1))) {
    throw ContractError("eval_quadratic_flow: t must lie strictly inside (0,1)");
  }
  return eval_quadratic_flow_unchecked(coeffs, t, anchor);
}

FlowField eval_quadratic_flow_field(const MotionCoeffs& coeffs, float t, int anchor) {
  return tensor_to_flow(eval_quadratic_flow(coeffs, t, anchor));
}

AnalyticCoeffPair analytic_coeffs(const FlowField& f_fwd, const FlowField& f_bwd_time) {
  if (f_fwd.width != f_bwd_time.width || f_fwd.height != f_bwd_time.height) {
    throw DimensionError("analytic_coeffs: flow shapes disagree");
  }
  AnalyticCoeffPair out{FlowField(f_fwd.width, f_fwd.height), FlowField(f_fwd.width, f_fwd.height)};
  const std::size_t n = f_fwd.data.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.alpha.data[i] = (f_fwd.data[i] - f_bwd_time.data[i]) * 0.5f;
    out.beta.data[i] = (f_fwd.data[i] + f_bwd_time.data[i]) * 0.5f;
  }
  return out;
}

MotionCoeffs analytic_coeffs_full(const FlowField& f01, const FlowField& f0m1,
                                  const FlowField& f10, const FlowField& f12) {
  const AnalyticCoeffPair a0 = analytic_coeffs(f01, f0m1);
  const AnalyticCoeffPair a1 = analytic_coeffs(f10, f12);
  MotionCoeffs c;
  c.alpha0 = flow_to_tensor(a0.alpha);
  c.beta0 = flow_to_tensor(a0.beta);
  c.alpha1 = flow_to_tensor(a1.alpha);
  c.beta1 = flow_to_tensor(a1.beta);
  return c;
}

template <typename T>
TensorT<T> reverse_flow(const TensorT<T>& flow, HoleMask* holes) {
  check_flow_tensor(flow, "reverse_flow");
  const std::int64_t H = flow.dim(1), W = flow.dim(2);
  const std::int64_t hw = H * W;
  const T* u = flow.data();
  const T* v = flow.data() + hw;

  // Accumulate in double so the float instantiation agrees with a double
  // brute-force reference to well under 1e-6.
  std::vector<double> num(static_cast<std::size_t>(2 * hw), 0.0);
  auto den = std::make_shared<std::vector<double>>(static_cast<std::size_t>(hw), 0.0);
  for (std::int64_t py = 0; py < H; ++py) {
    for (std::int64_t px = 0; px < W; ++px) {
      const std::int64_t i = py * W + px;
      const double fx = u[i], fy = v[i];
      const double qx = px + fx, qy = py + fy;
      const std::int64_t x0 = static_cast<std::int64_t>(std::floor(qx));
      const std::int64_t y0 = static_cast<std::int64_t>(std::floor(qy));
      for (std::int64_t yy = y0; yy <= y0 + 1; ++yy) {
        if (yy < 0 || yy >= H) continue;
        for (std::int64_t xx = x0; xx <= x0 + 1; ++xx) {
          if (xx < 0 || xx >= W) continue;
          const double dx = xx - qx, dy = yy - qy;
          const double w = std::exp(-(dx * dx + dy * dy));
          const std::int64_t o = yy * W + xx;
          num[static_cast<std::size_t>(o)] += w * (-fx);
          num[static_cast<std::size_t>(hw + o)] += w * (-fy);
          (*den)[static_cast<std::size_t>(o)] += w;
        }
      }
    }
  }

  TensorT<T> out = TensorT<T>::zeros({2, H, W});
  if (holes) *holes = HoleMask(static_cast<int>(W), static_cast<int>(H));
  T* od = out.data();
  for (std::int64_t o = 0; o < hw; ++o) {
    const double d = (*den)[static_cast<std::size_t>(o)];
    if (d > 0.0) {
      od[o] = static_cast<T>(num[static_cast<std::size_t>(o)] / d);
      od[hw + o] = static_cast<T>(num[static_cast<std::size_t>(hw + o)] / d);
    } else if (holes) {
      holes->data[static_cast<std::size_t>(o)] = 1;
    }
  }

  out.set_requires_grad(flow.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([flow, out, den]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t H = flow.dim(1), W = flow.dim(2);
      const std::int64_t hw = H * W;
      const T* u = flow.data();
      const T* v = flow.data() + hw;
      const T* B = out.data();
      std::vector<T> gf(static_cast<std::size_t>(2 * hw), T(0));
      for (std::int64_t py = 0; py < H; ++py) {
        for (std::int64_t px = 0; px < W; ++px) {
          const std::int64_t i = py * W + px;
          const double fx = u[i], fy = v[i];
          const double qx = px + fx, qy = py + fy;
          const std::int64_t x0 = static_cast<std::int64_t>(std::floor(qx));
          const std::int64_t y0 = static_cast<std::int64_t>(std::floor(qy));
          double gx = 0.0, gy = 0.0;
          for (std::int64_t yy = y0; yy <= y0 + 1; ++yy) {
            if (yy < 0 || yy >= H) continue;
            for (std::int64_t xx = x0; xx <= x0 + 1; ++xx) {
              if (xx < 0 || xx >= W) continue;
              const std::int64_t o = yy * W + xx;
              const double d = (*den)[static_cast<std::size_t>(o)];
              if (d <= 0.0) continue;
              const double dx = xx - qx, dy = yy - qy;
              const double w = std::exp(-(dx * dx + dy * dy));
              const double g0 = g[o], g1 = g[hw + o];
              // s collects d(out)/dw through both numerator values and the
              // denominator; the -g*w terms are the direct -F splat values.
              const double s = g0 * (-fx - static_cast<double>(B[o])) +
                               g1 * (-fy - static_cast<double>(B[hw + o]));
              gx += (s * (w * 2.0 * dx) - g0 * w) / d;
              gy += (s * (w * 2.0 * dy) - g1 * w) / d;
            }
          }
          gf[static_cast<std::size_t>(i)] += static_cast<T>(gx);
          gf[static_cast<std::size_t>(hw + i)] += static_cast<T>(gy);
        }
      }
      flow.accumulate_grad(gf.data(), 2 * hw);
    });
  }
  return out;
}

std::pair<FlowField, HoleMask> reverse_flow(const FlowField& flow) {
  HoleMask holes;
  Tensor rev = reverse_flow(flow_to_tensor(flow), &holes);
  return {tensor_to_flow(rev), std::move(holes)};
}

template <typename T>
TensorT<T> apply_refinement(const TensorT<T>& flow, const TensorT<T>& offsets,
                            const TensorT<T>& residuals) {
  check_flow_tensor(flow, "apply_refinement");
  if (offsets.shape() != flow.shape() || residuals.shape() != flow.shape()) {
    throw DimensionError("apply_refinement: offsets/residuals must match the flow shape");
  }
  const std::int64_t H = flow.dim(1), W = flow.dim(2);
  TensorT<T> coords = add(base_grid<T>(H, W), transpose_hwc(offsets));
  return add(grid_sample_bilinear(flow, coords), residuals);
}

template <typename T>
TensorT<T> backward_warp(const TensorT<T>& image, const TensorT<T>& flow) {
  if (image.ndim() != 3) throw DimensionError("backward_warp: image must be [C,H,W]");
  check_flow_tensor(flow, "backward_warp");
  if (image.dim(1) != flow.dim(1) || image.dim(2) != flow.dim(2)) {
    throw DimensionError("backward_warp: image and flow disagree on H,W");
  }
  const std::int64_t H = flow.dim(1), W = flow.dim(2);
  TensorT<T> coords = add(base_grid<T>(H, W), transpose_hwc(flow));
  return grid_sample_bilinear(image, coords);
}

Image backward_warp(const Image& image, const FlowField& flow) {
  return tensor_to_image(backward_warp(image_to_tensor(image), flow_to_tensor(flow)));
}

template <typename T>
TensorT<T> synthesize_frame(const TensorT<T>& i0, const TensorT<T>& i1, const TensorT<T>& fr_t0,
                            const TensorT<T>& fr_t1, const TensorT<T>& mask, T t) {
  if (!(t > T(0) && t < T(1))) throw ContractError("synthesize_frame: t must lie in (0,1)");
  if (i0.ndim() != 3 || i0.shape() != i1.shape()) {
    throw DimensionError("synthesize_frame: frames must be matching [C,H,W]");
  }
  if (mask.ndim() != 3 || mask.dim(0) != 1 || mask.dim(1) != i0.dim(1) ||
      mask.dim(2) != i0.dim(2)) {
    throw DimensionError("synthesize_frame: mask must be [1,H,W]");
  }
  const std::int64_t C = i0.dim(0);

  TensorT<T> w0 = backward_warp(i0, fr_t0);
  TensorT<T> w1 = backward_warp(i1, fr_t1);
  TensorT<T> inv_mask = add_scalar(scale(mask, T(-1)), T(1));
  TensorT<T> m_t = scale(mask, T(1) - t);
  TensorT<T> inv_t = scale(inv_mask, t);
  TensorT<T> denom1 = add_scalar(add(m_t, inv_t), T(1e-12));

  auto repeat_c = [C](const TensorT<T>& m) {
    std::vector<TensorT<T>> parts(static_cast<std::size_t>(C), m);
    return concat(parts, 0);
  };
  TensorT<T> numer = add(mul(repeat_c(m_t), w0), mul(repeat_c(inv_t), w1));
  return div(numer, repeat_c(denom1));
}

#define VFIKIT_INSTANTIATE_MOTION(T)                                                              \
  template TensorT<T> eval_quadratic_flow_unchecked(const MotionCoeffsT<T>&, T, int);             \
  template TensorT<T> eval_quadratic_flow(const MotionCoeffsT<T>&, T, int);                       \
  template TensorT<T> reverse_flow(const TensorT<T>&, HoleMask*);                                 \
  template TensorT<T> apply_refinement(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&);  \
  template TensorT<T> backward_warp(const TensorT<T>&, const TensorT<T>&);                        \
  template TensorT<T> synthesize_frame(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,   \
                                       const TensorT<T>&, const TensorT<T>&, T);

VFIKIT_INSTANTIATE_MOTION(float)
VFIKIT_INSTANTIATE_MOTION(double)

#undef VFIKIT_INSTANTIATE_MOTION

}  // namespace vfikit
