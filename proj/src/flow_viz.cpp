#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/io.hpp"

namespace vfikit {
namespace {

// Classic Middlebury color wheel: six hue arcs with the canonical segment
// lengths, 55 entries total.
std::vector<std::array<float, 3>> make_wheel() {
  const int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
  std::vector<std::array<float, 3>> wheel;
  wheel.reserve(RY + YG + GC + CB + BM + MR);
  for (int i = 0; i < RY; ++i) wheel.push_back({1.0f, static_cast<float>(i) / RY, 0.0f});
  for (int i = 0; i < YG; ++i) wheel.push_back({1.0f - static_cast<float>(i) / YG, 1.0f, 0.0f});
  for (int i = 0; i < GC; ++i) wheel.push_back({0.0f, 1.0f, static_cast<float>(i) / GC});
  for (int i = 0; i < CB; ++i) wheel.push_back({0.0f, 1.0f - static_cast<float>(i) / CB, 1.0f});
  for (int i = 0; i < BM; ++i) wheel.push_back({static_cast<float>(i) / BM, 0.0f, 1.0f});
  for (int i = 0; i < MR; ++i) wheel.push_back({1.0f, 0.0f, 1.0f - static_cast<float>(i) / MR});
  return wheel;
}

}  // namespace

Image flow_to_image(const FlowField& flow) {
  if (flow.width <= 0 || flow.height <= 0) throw ContractError("flow_to_image on empty flow");
  static const std::vector<std::array<float, 3>> wheel = make_wheel();
  const int ncols = static_cast<int>(wheel.size());

  double maxrad = 0.0;
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const double u = flow.u(y, x), v = flow.v(y, x);
      maxrad = std::max(maxrad, std::sqrt(u * u + v * v));
    }
  }
  if (maxrad < 1e-9) maxrad = 1e-9;

  Image img(flow.width, flow.height, 3);
  for (int y = 0; y < flow.height; ++y) {
    for (int x = 0; x < flow.width; ++x) {
      const double u = flow.u(y, x) / maxrad;
      const double v = flow.v(y, x) / maxrad;
      const double rad = std::sqrt(u * u + v * v);
      const double a = std::atan2(-v, -u) / M_PI;
      const double fk = (a + 1.0) / 2.0 * (ncols - 1);
      const int k0 = std::min(static_cast<int>(fk), ncols - 1);
      const int k1 = (k0 + 1) % ncols;
      const double f = fk - k0;
      for (int c = 0; c < 3; ++c) {
        double col = (1.0 - f) * wheel[static_cast<std::size_t>(k0)][static_cast<std::size_t>(c)] +
                     f * wheel[static_cast<std::size_t>(k1)][static_cast<std::size_t>(c)];
        // desaturate toward white near the center
        col = rad <= 1.0 ? 1.0 - rad * (1.0 - col) : col * 0.75;
        img.at(y, x, c) = static_cast<float>(col);
      }
    }
  }
  return img;
}

}  // namespace vfikit
