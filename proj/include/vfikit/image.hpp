#pragma once

#include <cstdint>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

// Interleaved HWC float image, values nominally in [0,1]. channels is 3 for
// color frames and 1 for masks saved as images.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f);

  float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return data.empty(); }
};

// Dense per-pixel displacement field. u is the x displacement, v the y
// displacement, interleaved at (y*W + x)*2.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  FlowField() = default;
  FlowField(int w, int h, float fill = 0.0f);

  float& u(int y, int x) { return data[(static_cast<std::size_t>(y) * width + x) * 2]; }
  float u(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 2]; }
  float& v(int y, int x) { return data[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
  float v(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 2 + 1]; }
  bool empty() const { return data.empty(); }
};

// Per-pixel occlusion indicator in [0,1]; the synthetic oracle emits exact
// 0/1 values.
struct OcclusionMap {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  OcclusionMap() = default;
  OcclusionMap(int w, int h, float fill = 0.0f);

  float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Pixels a splatting pass never reached.
struct HoleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  HoleMask() = default;
  HoleMask(int w, int h);

  bool at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int y, int x, bool hole) { data[static_cast<std::size_t>(y) * width + x] = hole ? 1 : 0; }
  std::int64_t count() const;
};

// HWC <-> CHW tensor bridges. Flows become [2,H,W] (u plane then v plane),
// images [C,H,W], occlusions [1,H,W].
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);
Tensor flow_to_tensor(const FlowField& f);
FlowField tensor_to_flow(const Tensor& t);
Tensor occlusion_to_tensor(const OcclusionMap& o);

}  // namespace vfikit
