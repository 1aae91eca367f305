#include "vfikit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vfikit/errors.hpp"

namespace vfikit {
namespace {

constexpr double kPsnrCap = 99.0;
constexpr int kWin = 11;
constexpr double kSigma = 1.5;

double psnr_span(const float* a, const float* b, std::int64_t n, double peak) {
  if (n <= 0) throw ContractError("psnr on empty input");
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(n);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

const double* gaussian_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w(kWin * kWin);
    double total = 0.0;
    for (int i = 0; i < kWin; ++i) {
      for (int j = 0; j < kWin; ++j) {
        const double dy = i - kWin / 2;
        const double dx = j - kWin / 2;
        w[static_cast<std::size_t>(i * kWin + j)] =
            std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        total += w[static_cast<std::size_t>(i * kWin + j)];
      }
    }
    for (double& v : w) v /= total;
    return w;
  }();
  return win.data();
}

double ssim_plane(const std::vector<double>& x, const std::vector<double>& y, int h, int w,
                  double peak) {
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const double* g = gaussian_window();
  double acc = 0.0;
  std::int64_t count = 0;
  for (int y0 = 0; y0 + kWin <= h; ++y0) {
    for (int x0 = 0; x0 + kWin <= w; ++x0) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double wt = g[i * kWin + j];
          const double xv = x[static_cast<std::size_t>((y0 + i) * w + (x0 + j))];
          const double yv = y[static_cast<std::size_t>((y0 + i) * w + (x0 + j))];
          mx += wt * xv;
          my += wt * yv;
          mxx += wt * xv * xv;
          myy += wt * yv * yv;
          mxy += wt * xv * yv;
        }
      }
      const double sxx = mxx - mx * mx;
      const double syy = myy - my * my;
      const double sxy = mxy - mx * my;
      acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) /
             ((mx * mx + my * my + c1) * (sxx + syy + c2));
      ++count;
    }
  }
  if (count == 0) throw ContractError("ssim needs inputs at least 11x11");
  return acc / static_cast<double>(count);
}

struct Planes {
  int channels = 0, h = 0, w = 0;
  std::vector<std::vector<double>> data;
};

Planes planes_from_tensor(const Tensor& t) {
  Planes p;
  if (t.ndim() == 2) {
    p.channels = 1;
    p.h = static_cast<int>(t.shape()[0]);
    p.w = static_cast<int>(t.shape()[1]);
  } else if (t.ndim() == 3) {
    p.channels = static_cast<int>(t.shape()[0]);
    p.h = static_cast<int>(t.shape()[1]);
    p.w = static_cast<int>(t.shape()[2]);
  } else {
    throw DimensionError("ssim expects [H,W] or [C,H,W], got " + detail::shape_str(t.shape()));
  }
  const float* d = t.data();
  p.data.resize(static_cast<std::size_t>(p.channels));
  const std::int64_t plane = static_cast<std::int64_t>(p.h) * p.w;
  for (int c = 0; c < p.channels; ++c) {
    p.data[static_cast<std::size_t>(c)].assign(d + c * plane, d + (c + 1) * plane);
  }
  return p;
}

Planes planes_from_image(const Image& img) {
  Planes p;
  p.channels = img.channels;
  p.h = img.height;
  p.w = img.width;
  p.data.assign(static_cast<std::size_t>(p.channels),
                std::vector<double>(static_cast<std::size_t>(p.h) * p.w));
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      for (int c = 0; c < p.channels; ++c) {
        p.data[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * p.w + x] =
            img.at(y, x, c);
      }
    }
  }
  return p;
}

double ssim_planes(const Planes& a, const Planes& b, double peak) {
  if (a.channels != b.channels || a.h != b.h || a.w != b.w) {
    throw DimensionError("ssim: input sizes differ");
  }
  double acc = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    acc += ssim_plane(a.data[static_cast<std::size_t>(c)], b.data[static_cast<std::size_t>(c)],
                      a.h, a.w, peak);
  }
  return acc / a.channels;
}

}  // namespace

double psnr(const Tensor& pred, const Tensor& gt, double peak) {
  if (pred.shape() != gt.shape()) throw DimensionError("psnr: shape mismatch");
  return psnr_span(pred.data(), gt.data(), pred.numel(), peak);
}

double psnr(const Image& pred, const Image& gt, double peak) {
  if (pred.width != gt.width || pred.height != gt.height || pred.channels != gt.channels) {
    throw DimensionError("psnr: image sizes differ");
  }
  return psnr_span(pred.data.data(), gt.data.data(),
                   static_cast<std::int64_t>(pred.data.size()), peak);
}

double ssim(const Tensor& pred, const Tensor& gt, double peak) {
  return ssim_planes(planes_from_tensor(pred), planes_from_tensor(gt), peak);
}

double ssim(const Image& pred, const Image& gt, double peak) {
  return ssim_planes(planes_from_image(pred), planes_from_image(gt), peak);
}

}  // namespace vfikit
