// Convolution and pooling kernels. This translation unit is compiled with
// value-unsafe FP optimizations (reassociation, contraction) so the reduction
// loops vectorize; every consumer compares conv outputs with tolerances.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

namespace {

inline std::int64_t conv_extent(std::int64_t in, int pad, std::int64_t k, int stride,
                                const char* axis) {
  const std::int64_t span = in + 2 * static_cast<std::int64_t>(pad) - k;
  if (span < 0) throw DimensionError(std::string("conv: kernel larger than padded ") + axis);
  return span / stride + 1;
}

// Valid output range [lo, hi) for which iw = ow*stride + off lies in [0, in).
inline void ow_range(std::int64_t off, std::int64_t in, int stride, std::int64_t out,
                     std::int64_t& lo, std::int64_t& hi) {
  std::int64_t l = 0;
  if (off < 0) l = (-off + stride - 1) / stride;
  std::int64_t h = 0;
  if (off < in) {
    const std::int64_t last = (in - 1 - off) / stride;
    h = std::min(out, last + 1);
  }
  lo = std::min(l, out);
  hi = std::max(h, lo);
}

}  // namespace

template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride, int padding) {
  if (input.ndim() != 4) throw DimensionError("conv2d: input must be [B,C,H,W]");
  if (weight.ndim() != 4) throw DimensionError("conv2d: weight must be [K,C,kh,kw]");
  if (stride < 1 || padding < 0) throw ContractError("conv2d: bad stride/padding");
  const std::int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::int64_t K = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != C) {
    throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(C));
  }
  if (kh % 2 == 0 || kw % 2 == 0) throw DimensionError("conv2d: kernel dims must be odd");
  if (bias.numel() != K) throw DimensionError("conv2d: bias size mismatch");
  const std::int64_t OH = conv_extent(H, padding, kh, stride, "height");
  const std::int64_t OW = conv_extent(W, padding, kw, stride, "width");

  TensorT<T> out = TensorT<T>::zeros({B, K, OH, OW});
  const T* in = input.data();
  const T* wt = weight.data();
  const T* bs = bias.data();
  T* op = out.data();

  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t k = 0; k < K; ++k) {
      for (std::int64_t oh = 0; oh < OH; ++oh) {
        T* orow = op + ((b * K + k) * OH + oh) * OW;
        const T bk = bs[k];
        for (std::int64_t ow = 0; ow < OW; ++ow) orow[ow] = bk;
        const std::int64_t ih0 = oh * stride - padding;
        const std::int64_t i_lo = std::max<std::int64_t>(0, -ih0);
        const std::int64_t i_hi = std::min<std::int64_t>(kh, H - ih0);
        for (std::int64_t c = 0; c < C; ++c) {
          const T* wrow = wt + ((k * C + c) * kh) * kw;
          for (std::int64_t i = i_lo; i < i_hi; ++i) {
            const T* irow = in + ((b * C + c) * H + (ih0 + i)) * W;
            for (std::int64_t j = 0; j < kw; ++j) {
              const T w = wrow[i * kw + j];
              const std::int64_t off = j - padding;
              std::int64_t lo, hi;
              ow_range(off, W, stride, OW, lo, hi);
              if (stride == 1) {
                const T* src = irow + off;
                for (std::int64_t ow = lo; ow < hi; ++ow) orow[ow] += w * src[ow];
              } else {
                for (std::int64_t ow = lo; ow < hi; ++ow) orow[ow] += w * irow[ow * stride + off];
              }
            }
          }
        }
      }
    }
  }

  out.set_requires_grad(input.requires_grad() || weight.requires_grad() || bias.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([input, weight, bias, out, stride, padding]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
      const std::int64_t K = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
      const std::int64_t OH = out.dim(2), OW = out.dim(3);
      const T* in = input.data();
      const T* wt = weight.data();
      const bool need_in = input.requires_grad();
      const bool need_wt = weight.requires_grad();
      std::vector<T> gin(need_in ? static_cast<std::size_t>(input.numel()) : 0, T(0));
      std::vector<T> gwt(need_wt ? static_cast<std::size_t>(weight.numel()) : 0, T(0));

      if (bias.requires_grad()) {
        std::vector<T> gbs(static_cast<std::size_t>(K), T(0));
        for (std::int64_t b = 0; b < B; ++b)
          for (std::int64_t k = 0; k < K; ++k) {
            const T* gk = g + (b * K + k) * OH * OW;
            T acc(0);
            for (std::int64_t i = 0; i < OH * OW; ++i) acc += gk[i];
            gbs[static_cast<std::size_t>(k)] += acc;
          }
        bias.accumulate_grad(gbs.data(), K);
      }

      if (need_in || need_wt) {
        for (std::int64_t b = 0; b < B; ++b) {
          for (std::int64_t k = 0; k < K; ++k) {
            for (std::int64_t oh = 0; oh < OH; ++oh) {
              const T* grow = g + ((b * K + k) * OH + oh) * OW;
              const std::int64_t ih0 = oh * stride - padding;
              const std::int64_t i_lo = std::max<std::int64_t>(0, -ih0);
              const std::int64_t i_hi = std::min<std::int64_t>(kh, H - ih0);
              for (std::int64_t c = 0; c < C; ++c) {
                for (std::int64_t i = i_lo; i < i_hi; ++i) {
                  const std::int64_t irow_off = ((b * C + c) * H + (ih0 + i)) * W;
                  const T* irow = in + irow_off;
                  T* ginrow = need_in ? gin.data() + irow_off : nullptr;
                  for (std::int64_t j = 0; j < kw; ++j) {
                    const std::int64_t widx = ((k * C + c) * kh + i) * kw + j;
                    const std::int64_t off = j - padding;
                    std::int64_t lo, hi;
                    ow_range(off, W, stride, OW, lo, hi);
                    if (need_wt) {
                      T acc(0);
                      if (stride == 1) {
                        const T* src = irow + off;
                        for (std::int64_t ow = lo; ow < hi; ++ow) acc += grow[ow] * src[ow];
                      } else {
                        for (std::int64_t ow = lo; ow < hi; ++ow)
                          acc += grow[ow] * irow[ow * stride + off];
                      }
                      gwt[static_cast<std::size_t>(widx)] += acc;
                    }
                    if (need_in) {
                      const T w = wt[widx];
                      if (stride == 1) {
                        T* dst = ginrow + off;
                        for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow] += w * grow[ow];
                      } else {
                        for (std::int64_t ow = lo; ow < hi; ++ow)
                          ginrow[ow * stride + off] += w * grow[ow];
                      }
                    }
                  }
                }
              }
            }
          }
        }
        if (need_in) input.accumulate_grad(gin.data(), input.numel());
        if (need_wt) weight.accumulate_grad(gwt.data(), weight.numel());
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  std::array<int, 3> stride, std::array<int, 3> padding) {
  if (input.ndim() != 5) throw DimensionError("conv3d: input must be [B,C,D,H,W]");
  if (weight.ndim() != 5) throw DimensionError("conv3d: weight must be [K,C,kt,kh,kw]");
  for (int a = 0; a < 3; ++a) {
    if (stride[a] < 1 || padding[a] < 0) throw ContractError("conv3d: bad stride/padding");
  }
  const std::int64_t B = input.dim(0), C = input.dim(1), D = input.dim(2), H = input.dim(3),
                     W = input.dim(4);
  const std::int64_t K = weight.dim(0), kt = weight.dim(2), kh = weight.dim(3), kw = weight.dim(4);
  if (weight.dim(1) != C) {
    throw DimensionError("conv3d: weight expects " + std::to_string(weight.dim(1)) +
                         " input channels, input has " + std::to_string(C));
  }
  // kt may be even: an output head uses kt=2, pad 0 to collapse the temporal
  // axis. Spatial kernels stay odd so padding=k/2 preserves H,W.
  if (kh % 2 == 0 || kw % 2 == 0) throw DimensionError("conv3d: spatial kernel dims must be odd");
  if (bias.numel() != K) throw DimensionError("conv3d: bias size mismatch");
  const std::int64_t OD = conv_extent(D, padding[0], kt, stride[0], "depth");
  const std::int64_t OH = conv_extent(H, padding[1], kh, stride[1], "height");
  const std::int64_t OW = conv_extent(W, padding[2], kw, stride[2], "width");

  TensorT<T> out = TensorT<T>::zeros({B, K, OD, OH, OW});
  const T* in = input.data();
  const T* wt = weight.data();
  const T* bs = bias.data();
  T* op = out.data();
  const int st = stride[0], sh = stride[1], sw = stride[2];
  const int pt = padding[0], ph = padding[1], pw = padding[2];

  for (std::int64_t b = 0; b < B; ++b) {
    for (std::int64_t k = 0; k < K; ++k) {
      for (std::int64_t od = 0; od < OD; ++od) {
        const std::int64_t id0 = od * st - pt;
        const std::int64_t it_lo = std::max<std::int64_t>(0, -id0);
        const std::int64_t it_hi = std::min<std::int64_t>(kt, D - id0);
        for (std::int64_t oh = 0; oh < OH; ++oh) {
          T* orow = op + (((b * K + k) * OD + od) * OH + oh) * OW;
          const T bk = bs[k];
          for (std::int64_t ow = 0; ow < OW; ++ow) orow[ow] = bk;
          const std::int64_t ih0 = oh * sh - ph;
          const std::int64_t i_lo = std::max<std::int64_t>(0, -ih0);
          const std::int64_t i_hi = std::min<std::int64_t>(kh, H - ih0);
          for (std::int64_t c = 0; c < C; ++c) {
            for (std::int64_t it = it_lo; it < it_hi; ++it) {
              for (std::int64_t i = i_lo; i < i_hi; ++i) {
                const T* irow = in + (((b * C + c) * D + (id0 + it)) * H + (ih0 + i)) * W;
                const T* wrow = wt + (((k * C + c) * kt + it) * kh + i) * kw;
                for (std::int64_t j = 0; j < kw; ++j) {
                  const T w = wrow[j];
                  const std::int64_t off = j - pw;
                  std::int64_t lo, hi;
                  ow_range(off, W, sw, OW, lo, hi);
                  if (sw == 1) {
                    const T* src = irow + off;
                    for (std::int64_t ow = lo; ow < hi; ++ow) orow[ow] += w * src[ow];
                  } else {
                    for (std::int64_t ow = lo; ow < hi; ++ow) orow[ow] += w * irow[ow * sw + off];
                  }
                }
              }
            }
          }
        }
      }
    }
  }

  out.set_requires_grad(input.requires_grad() || weight.requires_grad() || bias.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([input, weight, bias, out, stride, padding]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t B = input.dim(0), C = input.dim(1), D = input.dim(2), H = input.dim(3),
                         W = input.dim(4);
      const std::int64_t K = weight.dim(0), kt = weight.dim(2), kh = weight.dim(3),
                         kw = weight.dim(4);
      const std::int64_t OD = out.dim(2), OH = out.dim(3), OW = out.dim(4);
      const int st = stride[0], sh = stride[1], sw = stride[2];
      const int pt = padding[0], ph = padding[1], pw = padding[2];
      const T* in = input.data();
      const T* wt = weight.data();
      const bool need_in = input.requires_grad();
      const bool need_wt = weight.requires_grad();
      std::vector<T> gin(need_in ? static_cast<std::size_t>(input.numel()) : 0, T(0));
      std::vector<T> gwt(need_wt ? static_cast<std::size_t>(weight.numel()) : 0, T(0));

      if (bias.requires_grad()) {
        std::vector<T> gbs(static_cast<std::size_t>(K), T(0));
        const std::int64_t plane = OD * OH * OW;
        for (std::int64_t b = 0; b < B; ++b)
          for (std::int64_t k = 0; k < K; ++k) {
            const T* gk = g + (b * K + k) * plane;
            T acc(0);
            for (std::int64_t i = 0; i < plane; ++i) acc += gk[i];
            gbs[static_cast<std::size_t>(k)] += acc;
          }
        bias.accumulate_grad(gbs.data(), K);
      }

      if (need_in || need_wt) {
        for (std::int64_t b = 0; b < B; ++b) {
          for (std::int64_t k = 0; k < K; ++k) {
            for (std::int64_t od = 0; od < OD; ++od) {
              const std::int64_t id0 = od * st - pt;
              const std::int64_t it_lo = std::max<std::int64_t>(0, -id0);
              const std::int64_t it_hi = std::min<std::int64_t>(kt, D - id0);
              for (std::int64_t oh = 0; oh < OH; ++oh) {
                const T* grow = g + (((b * K + k) * OD + od) * OH + oh) * OW;
                const std::int64_t ih0 = oh * sh - ph;
                const std::int64_t i_lo = std::max<std::int64_t>(0, -ih0);
                const std::int64_t i_hi = std::min<std::int64_t>(kh, H - ih0);
                for (std::int64_t c = 0; c < C; ++c) {
                  for (std::int64_t it = it_lo; it < it_hi; ++it) {
                    for (std::int64_t i = i_lo; i < i_hi; ++i) {
                      const std::int64_t irow_off =
                          (((b * C + c) * D + (id0 + it)) * H + (ih0 + i)) * W;
                      const T* irow = in + irow_off;
                      T* ginrow = need_in ? gin.data() + irow_off : nullptr;
                      const std::int64_t wrow_off = (((k * C + c) * kt + it) * kh + i) * kw;
                      for (std::int64_t j = 0; j < kw; ++j) {
                        const std::int64_t off = j - pw;
                        std::int64_t lo, hi;
                        ow_range(off, W, sw, OW, lo, hi);
                        if (need_wt) {
                          T acc(0);
                          if (sw == 1) {
                            const T* src = irow + off;
                            for (std::int64_t ow = lo; ow < hi; ++ow) acc += grow[ow] * src[ow];
                          } else {
                            for (std::int64_t ow = lo; ow < hi; ++ow)
                              acc += grow[ow] * irow[ow * sw + off];
                          }
                          gwt[static_cast<std::size_t>(wrow_off + j)] += acc;
                        }
                        if (need_in) {
                          const T w = wt[wrow_off + j];
                          if (sw == 1) {
                            T* dst = ginrow + off;
                            for (std::int64_t ow = lo; ow < hi; ++ow) dst[ow] += w * grow[ow];
                          } else {
                            for (std::int64_t ow = lo; ow < hi; ++ow)
                              ginrow[ow * sw + off] += w * grow[ow];
                          }
                        }
                      }
                    }
                  }
                }
              }
            }
          }
        }
        if (need_in) input.accumulate_grad(gin.data(), input.numel());
        if (need_wt) weight.accumulate_grad(gwt.data(), weight.numel());
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> conv3d(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias,
                  int stride, int padding) {
  return conv3d(input, weight, bias, std::array<int, 3>{stride, stride, stride},
                std::array<int, 3>{padding, padding, padding});
}

template <typename T>
TensorT<T> maxpool_spatial(const TensorT<T>& input) {
  const int nd = input.ndim();
  if (nd != 4 && nd != 5) throw DimensionError("maxpool_spatial: input must be 4-D or 5-D");
  const std::int64_t H = input.dim(nd - 2), W = input.dim(nd - 1);
  if (H % 2 != 0 || W % 2 != 0) {
    throw DimensionError("maxpool_spatial: H and W must be even, got " +
                         detail::shape_str(input.shape()));
  }
  std::int64_t planes = 1;
  std::vector<std::int64_t> out_shape = input.shape();
  for (int i = 0; i < nd - 2; ++i) planes *= input.dim(i);
  out_shape[static_cast<std::size_t>(nd - 2)] = H / 2;
  out_shape[static_cast<std::size_t>(nd - 1)] = W / 2;
  TensorT<T> out = TensorT<T>::zeros(out_shape);

  const std::int64_t OH = H / 2, OW = W / 2;
  const T* in = input.data();
  T* op = out.data();
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(out.numel()));
  std::int64_t oi = 0;
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* plane = in + p * H * W;
    for (std::int64_t oy = 0; oy < OH; ++oy) {
      for (std::int64_t ox = 0; ox < OW; ++ox, ++oi) {
        const std::int64_t base = (2 * oy) * W + 2 * ox;
        std::int64_t best = base;
        T v = plane[base];
        const std::int64_t cand[3] = {base + 1, base + W, base + W + 1};
        for (std::int64_t c : cand) {
          if (plane[c] > v) {
            v = plane[c];
            best = c;
          }
        }
        op[oi] = v;
        (*argmax)[static_cast<std::size_t>(oi)] = p * H * W + best;
      }
    }
  }

  out.set_requires_grad(input.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([input, out, argmax]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      std::vector<T> gin(static_cast<std::size_t>(input.numel()), T(0));
      const std::int64_t n = out.numel();
      for (std::int64_t i = 0; i < n; ++i)
        gin[static_cast<std::size_t>((*argmax)[static_cast<std::size_t>(i)])] += g[i];
      input.accumulate_grad(gin.data(), input.numel());
    });
  }
  return out;
}

#define VFIKIT_INSTANTIATE_CONV(T)                                                                \
  template TensorT<T> conv2d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int);  \
  template TensorT<T> conv3d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&, int, int);  \
  template TensorT<T> conv3d(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&,             \
                             std::array<int, 3>, std::array<int, 3>);                             \
  template TensorT<T> maxpool_spatial(const TensorT<T>&);

VFIKIT_INSTANTIATE_CONV(float)
VFIKIT_INSTANTIATE_CONV(double)

#undef VFIKIT_INSTANTIATE_CONV

}  // namespace vfikit
