#include "vfikit/image.hpp"

#include <numeric>

namespace vfikit {

namespace {
void check_dims(int w, int h, int c, const char* what) {
  if (w <= 0 || h <= 0 || c <= 0) {
    throw DimensionError(std::string(what) + ": dimensions must be positive");
  }
}
}  // namespace

Image::Image(int w, int h, int c, float fill) : width(w), height(h), channels(c) {
  check_dims(w, h, c, "Image");
  data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

FlowField::FlowField(int w, int h, float fill) : width(w), height(h) {
  check_dims(w, h, 1, "FlowField");
  data.assign(static_cast<std::size_t>(w) * h * 2, fill);
}

OcclusionMap::OcclusionMap(int w, int h, float fill) : width(w), height(h) {
  check_dims(w, h, 1, "OcclusionMap");
  data.assign(static_cast<std::size_t>(w) * h, fill);
}

HoleMask::HoleMask(int w, int h) : width(w), height(h) {
  check_dims(w, h, 1, "HoleMask");
  data.assign(static_cast<std::size_t>(w) * h, 0);
}

std::int64_t HoleMask::count() const {
  return std::accumulate(data.begin(), data.end(), std::int64_t(0),
                         [](std::int64_t a, std::uint8_t b) { return a + (b != 0); });
}

Tensor image_to_tensor(const Image& img) {
  if (img.empty()) throw ContractError("image_to_tensor: empty image");
  Tensor t({img.channels, img.height, img.width});
  float* d = t.data();
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) *d++ = img.at(y, x, c);
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.ndim() != 3) throw DimensionError("tensor_to_image: want [C,H,W]");
  Image img(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(1)), static_cast<int>(t.dim(0)));
  const float* d = t.data();
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) img.at(y, x, c) = *d++;
  return img;
}

Tensor flow_to_tensor(const FlowField& f) {
  if (f.empty()) throw ContractError("flow_to_tensor: empty flow");
  Tensor t({2, f.height, f.width});
  float* d = t.data();
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) *d++ = f.u(y, x);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) *d++ = f.v(y, x);
  return t;
}

FlowField tensor_to_flow(const Tensor& t) {
  if (t.ndim() != 3 || t.dim(0) != 2) throw DimensionError("tensor_to_flow: want [2,H,W]");
  FlowField f(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(1)));
  const float* d = t.data();
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) f.u(y, x) = *d++;
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) f.v(y, x) = *d++;
  return f;
}

Tensor occlusion_to_tensor(const OcclusionMap& o) {
  if (o.data.empty()) throw ContractError("occlusion_to_tensor: empty map");
  Tensor t({1, o.height, o.width});
  std::copy(o.data.begin(), o.data.end(), t.data());
  return t;
}

}  // namespace vfikit
