#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vfikit/image.hpp"
#include "vfikit/motion.hpp"
#include "vfikit/tensor.hpp"

namespace vfikit {

// Thin learnable-layer wrappers. Weights are created by the owning network
// with seeded He fan-in initialization and zero biases.
struct Conv2d {
  Tensor w, b;
  int stride = 1, pad = 1;
  Tensor forward(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

struct Conv3d {
  Tensor w, b;
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> pad{1, 1, 1};
  Tensor forward(const Tensor& x) const { return conv3d(x, w, b, stride, pad); }
};

// y = x + c2(lrelu(c1(x))), shape preserving.
struct ResBlock2d {
  Conv2d c1, c2;
  Tensor forward(const Tensor& x) const;
};
struct ResBlock3d {
  Conv3d c1, c2;
  Tensor forward(const Tensor& x) const;
};

// Stream descent: 2x2 spatial max pool then one conv to the wider stream.
struct Down2d {
  Conv2d conv;
  Tensor forward(const Tensor& x) const { return conv.forward(maxpool_spatial(x)); }
};
struct Down3d {
  Conv3d conv;
  Tensor forward(const Tensor& x) const { return conv.forward(maxpool_spatial(x)); }
};

// Stream ascent: bilinear 2x spatial upsample then two convs.
struct Up2d {
  Conv2d c1, c2;
  Tensor forward(const Tensor& x) const;
};
struct Up3d {
  Conv3d c1, c2;
  Tensor forward(const Tensor& x) const;
};

// Three-stream grid network over space-time volumes. Column 0 is the input
// head plus the descent chain; columns 1-2 add residual blocks with further
// descents (top row first); columns 3-5 add residual blocks with ascents
// (bottom row first). The output head collapses the temporal extent 3 -> 2
// with an unpadded kernel of temporal size 2.
struct GridNet3D {
  std::array<int, 3> widths{16, 32, 64};
  Conv3d head;                                      // 6 -> widths[0]
  std::array<Down3d, 2> chain;                      // column-0 descents
  std::array<std::array<ResBlock3d, 5>, 3> blocks;  // [row][column-1]
  std::array<std::array<Down3d, 2>, 2> downs;       // [column-1][target row-1]
  std::array<std::array<Up3d, 2>, 3> ups;           // [column-3][target row]
  Conv3d out;                                       // widths[0] -> 4, kernel (2,3,3)

  explicit GridNet3D(unsigned seed, std::array<int, 3> w = {16, 32, 64});
  // [B,6,3,H,W] -> [B,4,2,H,W]; H and W must be divisible by 4.
  Tensor forward(const Tensor& x) const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

// Same grid over 2D features for motion refinement. Input is the 16-channel
// stack (I0, I1, warped0, warped1, F_t0, F_t1); the 8 output channels are
// (offset, residual) x/y pairs for each flow, and the pre-head features are
// exposed for the blending-mask head.
struct GridNet2DMR {
  std::array<int, 3> widths{32, 64, 96};
  Conv2d head;  // 16 -> widths[0]
  std::array<Down2d, 2> chain;
  std::array<std::array<ResBlock2d, 5>, 3> blocks;
  std::array<std::array<Down2d, 2>, 2> downs;
  std::array<std::array<Up2d, 2>, 3> ups;
  Conv2d out;  // widths[0] -> 8

  explicit GridNet2DMR(unsigned seed, std::array<int, 3> w = {32, 64, 96});
  // [B,16,H,W] -> {[B,8,H,W], features [B,widths[0],H,W]}.
  std::pair<Tensor, Tensor> forward(const Tensor& x) const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

// Three convolutions then a sigmoid; consumes the two warped frames plus the
// refinement features and emits the soft blending mask in (0,1).
struct BMEHead {
  Conv2d c1, c2, c3;
  explicit BMEHead(unsigned seed, int feature_channels = 32);
  Tensor forward(const Tensor& x) const;  // [B,6+F,H,W] -> [B,1,H,W]
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

// Packs the three bidirectional pair flows and occlusion maps, temporally
// ordered, into the estimator input. Slot s holds pair (s-1, s) of the frame
// times (-1,0,1,2); channels are fwd flow (u,v), bwd flow (u,v), fwd
// occlusion, bwd occlusion.
Tensor nme_pack_input(const std::array<FlowField, 3>& fwd, const std::array<FlowField, 3>& bwd,
                      const std::array<OcclusionMap, 3>& occ_fwd,
                      const std::array<OcclusionMap, 3>& occ_bwd);

// Runs the estimator on a packed [1,6,3,H,W] input and splits the result
// into per-anchor coefficient maps: temporal slice 0 gives (alpha0, beta0),
// slice 1 gives (alpha1, beta1); channels 0-1 are alpha, 2-3 beta.
MotionCoeffs gridnet3d_forward(const GridNet3D& net, const Tensor& packed);

struct MRResult {
  Tensor offsets0, residuals0, offsets1, residuals1;  // each [2,H,W]
  Tensor features;                                    // [F,H,W]
};
// All images [3,H,W], flows [2,H,W].
MRResult mr_forward(const GridNet2DMR& net, const Tensor& i0, const Tensor& i1,
                    const Tensor& warped0, const Tensor& warped1, const Tensor& f_t0,
                    const Tensor& f_t1);

// warped frames [3,H,W], features [F,H,W] -> mask [1,H,W] in (0,1).
Tensor bme_forward(const BMEHead& head, const Tensor& warped0, const Tensor& warped1,
                   const Tensor& features);

std::int64_t param_count(const std::vector<std::pair<std::string, Tensor>>& params);
std::int64_t param_count(const Conv2d& layer);
std::int64_t param_count(const GridNet3D& net);
std::int64_t param_count(const GridNet2DMR& net);
std::int64_t param_count(const BMEHead& head);

}  // namespace vfikit
