#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

template <typename T>
TensorT<T> resize_bilinear(const TensorT<T>& input, int scale) {
  const int nd = input.ndim();
  if (nd != 4 && nd != 5) throw DimensionError("resize_bilinear: input must be 4-D or 5-D");
  if (scale < 1) throw ContractError("resize_bilinear: scale must be >= 1");
  const std::int64_t H = input.dim(nd - 2), W = input.dim(nd - 1);
  const std::int64_t OH = H * scale, OW = W * scale;
  std::int64_t planes = 1;
  for (int i = 0; i < nd - 2; ++i) planes *= input.dim(i);
  std::vector<std::int64_t> out_shape = input.shape();
  out_shape[static_cast<std::size_t>(nd - 2)] = OH;
  out_shape[static_cast<std::size_t>(nd - 1)] = OW;
  TensorT<T> out = TensorT<T>::zeros(out_shape);

  // Half-pixel-centers source coordinates, precomputed per output column/row.
  struct Lerp {
    std::int64_t i0, i1;
    T f;
  };
  auto make_lerp = [scale](std::int64_t n, std::int64_t on) {
    std::vector<Lerp> v(static_cast<std::size_t>(on));
    for (std::int64_t o = 0; o < on; ++o) {
      const T s = (static_cast<T>(o) + T(0.5)) / static_cast<T>(scale) - T(0.5);
      const T fl = std::floor(s);
      std::int64_t i0 = static_cast<std::int64_t>(fl);
      const T f = s - fl;
      std::int64_t i1 = i0 + 1;
      i0 = std::clamp<std::int64_t>(i0, 0, n - 1);
      i1 = std::clamp<std::int64_t>(i1, 0, n - 1);
      v[static_cast<std::size_t>(o)] = {i0, i1, f};
    }
    return v;
  };
  const auto ly = make_lerp(H, OH);
  const auto lx = make_lerp(W, OW);

  const T* in = input.data();
  T* op = out.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    const T* plane = in + p * H * W;
    T* oplane = op + p * OH * OW;
    for (std::int64_t oy = 0; oy < OH; ++oy) {
      const auto& y = ly[static_cast<std::size_t>(oy)];
      const T* r0 = plane + y.i0 * W;
      const T* r1 = plane + y.i1 * W;
      T* orow = oplane + oy * OW;
      for (std::int64_t ox = 0; ox < OW; ++ox) {
        const auto& x = lx[static_cast<std::size_t>(ox)];
        const T top = r0[x.i0] + x.f * (r0[x.i1] - r0[x.i0]);
        const T bot = r1[x.i0] + x.f * (r1[x.i1] - r1[x.i0]);
        orow[ox] = top + y.f * (bot - top);
      }
    }
  }

  out.set_requires_grad(input.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([input, out, ly, lx, planes, H, W, OH, OW]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      std::vector<T> gin(static_cast<std::size_t>(input.numel()), T(0));
      for (std::int64_t p = 0; p < planes; ++p) {
        T* gplane = gin.data() + p * H * W;
        const T* goplane = g + p * OH * OW;
        for (std::int64_t oy = 0; oy < OH; ++oy) {
          const auto& y = ly[static_cast<std::size_t>(oy)];
          for (std::int64_t ox = 0; ox < OW; ++ox) {
            const auto& x = lx[static_cast<std::size_t>(ox)];
            const T go = goplane[oy * OW + ox];
            gplane[y.i0 * W + x.i0] += go * (T(1) - y.f) * (T(1) - x.f);
            gplane[y.i0 * W + x.i1] += go * (T(1) - y.f) * x.f;
            gplane[y.i1 * W + x.i0] += go * y.f * (T(1) - x.f);
            gplane[y.i1 * W + x.i1] += go * y.f * x.f;
          }
        }
      }
      input.accumulate_grad(gin.data(), input.numel());
    });
  }
  return out;
}

namespace {

// One bilinear tap with border clamping. dvalid is 1 where the coordinate
// moves the sample (inside the image), 0 where the clamp saturates it.
template <typename T>
struct Tap {
  std::int64_t i0, i1;
  T f;
  T dvalid;
};

template <typename T>
Tap<T> make_tap(T pos, std::int64_t n) {
  const T c = std::clamp(pos, T(0), static_cast<T>(n - 1));
  const T fl = std::floor(c);
  std::int64_t i0 = static_cast<std::int64_t>(fl);
  std::int64_t i1 = std::min<std::int64_t>(i0 + 1, n - 1);
  i0 = std::min<std::int64_t>(i0, n - 1);
  const T dvalid = (pos > T(0) && pos < static_cast<T>(n - 1)) ? T(1) : T(0);
  return {i0, i1, c - fl, dvalid};
}

}  // namespace

template <typename T>
TensorT<T> grid_sample_bilinear(const TensorT<T>& image, const TensorT<T>& coords) {
  if (image.ndim() != 3) throw DimensionError("grid_sample: image must be [C,H,W]");
  if (coords.ndim() != 3 || coords.dim(2) != 2) {
    throw DimensionError("grid_sample: coords must be [H,W,2]");
  }
  const std::int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const std::int64_t OH = coords.dim(0), OW = coords.dim(1);
  TensorT<T> out = TensorT<T>::zeros({C, OH, OW});

  const T* im = image.data();
  const T* cd = coords.data();
  T* op = out.data();
  for (std::int64_t oy = 0; oy < OH; ++oy) {
    for (std::int64_t ox = 0; ox < OW; ++ox) {
      const std::int64_t ci = (oy * OW + ox) * 2;
      const Tap<T> tx = make_tap(cd[ci], W);
      const Tap<T> ty = make_tap(cd[ci + 1], H);
      for (std::int64_t c = 0; c < C; ++c) {
        const T* plane = im + c * H * W;
        const T v00 = plane[ty.i0 * W + tx.i0];
        const T v01 = plane[ty.i0 * W + tx.i1];
        const T v10 = plane[ty.i1 * W + tx.i0];
        const T v11 = plane[ty.i1 * W + tx.i1];
        const T top = v00 + tx.f * (v01 - v00);
        const T bot = v10 + tx.f * (v11 - v10);
        op[(c * OH + oy) * OW + ox] = top + ty.f * (bot - top);
      }
    }
  }

  out.set_requires_grad(image.requires_grad() || coords.requires_grad());
  if (detail::tracing<T>(out.requires_grad())) {
    TapeT<T>::active()->record([image, coords, out]() mutable {
      const T* g = out.grad_data();
      if (!g) return;
      const std::int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
      const std::int64_t OH = coords.dim(0), OW = coords.dim(1);
      const T* im = image.data();
      const T* cd = coords.data();
      const bool need_im = image.requires_grad();
      const bool need_cd = coords.requires_grad();
      std::vector<T> gim(need_im ? static_cast<std::size_t>(image.numel()) : 0, T(0));
      std::vector<T> gcd(need_cd ? static_cast<std::size_t>(coords.numel()) : 0, T(0));
      for (std::int64_t oy = 0; oy < OH; ++oy) {
        for (std::int64_t ox = 0; ox < OW; ++ox) {
          const std::int64_t ci = (oy * OW + ox) * 2;
          const Tap<T> tx = make_tap(cd[ci], W);
          const Tap<T> ty = make_tap(cd[ci + 1], H);
          T dx(0), dy(0);
          for (std::int64_t c = 0; c < C; ++c) {
            const T go = g[(c * OH + oy) * OW + ox];
            if (go == T(0)) continue;
            const T* plane = im + c * H * W;
            const T v00 = plane[ty.i0 * W + tx.i0];
            const T v01 = plane[ty.i0 * W + tx.i1];
            const T v10 = plane[ty.i1 * W + tx.i0];
            const T v11 = plane[ty.i1 * W + tx.i1];
            if (need_im) {
              T* gplane = gim.data() + c * H * W;
              gplane[ty.i0 * W + tx.i0] += go * (T(1) - ty.f) * (T(1) - tx.f);
              gplane[ty.i0 * W + tx.i1] += go * (T(1) - ty.f) * tx.f;
              gplane[ty.i1 * W + tx.i0] += go * ty.f * (T(1) - tx.f);
              gplane[ty.i1 * W + tx.i1] += go * ty.f * tx.f;
            }
            if (need_cd) {
              dx += go * ((T(1) - ty.f) * (v01 - v00) + ty.f * (v11 - v10));
              dy += go * ((T(1) - tx.f) * (v10 - v00) + tx.f * (v11 - v01));
            }
          }
          if (need_cd) {
            gcd[static_cast<std::size_t>(ci)] += dx * tx.dvalid;
            gcd[static_cast<std::size_t>(ci + 1)] += dy * ty.dvalid;
          }
        }
      }
      if (need_im) image.accumulate_grad(gim.data(), image.numel());
      if (need_cd) coords.accumulate_grad(gcd.data(), coords.numel());
    });
  }
  return out;
}

#define VFIKIT_INSTANTIATE_SAMPLE(T)                                                              \
  template TensorT<T> resize_bilinear(const TensorT<T>&, int);                                    \
  template TensorT<T> grid_sample_bilinear(const TensorT<T>&, const TensorT<T>&);

VFIKIT_INSTANTIATE_SAMPLE(float)
VFIKIT_INSTANTIATE_SAMPLE(double)

#undef VFIKIT_INSTANTIATE_SAMPLE

}  // namespace vfikit
