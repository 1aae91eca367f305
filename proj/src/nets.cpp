#include "vfikit/nets.hpp"

#include <cmath>
#include <random>

#include "vfikit/errors.hpp"

namespace vfikit {

namespace {

constexpr float kSlope = 0.1f;

Tensor he_weights(std::mt19937& rng, std::vector<std::int64_t> shape, float gain) {
  std::int64_t fan_in = 1;
  for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
  std::normal_distribution<float> dist(0.0f, gain * std::sqrt(2.0f / static_cast<float>(fan_in)));
  std::int64_t n = 1;
  for (std::int64_t s : shape) n *= s;
  std::vector<float> d(static_cast<std::size_t>(n));
  for (float& v : d) v = dist(rng);
  Tensor t = Tensor::from_vector(std::move(shape), std::move(d));
  t.set_requires_grad(true);
  return t;
}

Tensor zero_bias(std::int64_t k) {
  Tensor t = Tensor::zeros({k});
  t.set_requires_grad(true);
  return t;
}

Conv2d make_conv2d(std::mt19937& rng, int cin, int cout, float gain = 1.0f) {
  Conv2d c;
  c.w = he_weights(rng, {cout, cin, 3, 3}, gain);
  c.b = zero_bias(cout);
  return c;
}

Conv3d make_conv3d(std::mt19937& rng, int cin, int cout, float gain = 1.0f) {
  Conv3d c;
  c.w = he_weights(rng, {cout, cin, 3, 3, 3}, gain);
  c.b = zero_bias(cout);
  return c;
}

// Convs whose outputs are summed into another stream (residual branches,
// encoder/decoder row merges, output heads) start at 0.1x He gain. Plain He on
// this additive grid topology compounds activation variance by orders of
// magnitude, saturating the downstream sigmoid and starting the motion
// coefficients far from zero.
constexpr float kMergeGain = 0.1f;

ResBlock2d make_res2d(std::mt19937& rng, int ch) {
  return ResBlock2d{make_conv2d(rng, ch, ch), make_conv2d(rng, ch, ch, kMergeGain)};
}
ResBlock3d make_res3d(std::mt19937& rng, int ch) {
  return ResBlock3d{make_conv3d(rng, ch, ch), make_conv3d(rng, ch, ch, kMergeGain)};
}
Down2d make_down2d(std::mt19937& rng, int cin, int cout, float gain = 1.0f) {
  return Down2d{make_conv2d(rng, cin, cout, gain)};
}
Down3d make_down3d(std::mt19937& rng, int cin, int cout, float gain = 1.0f) {
  return Down3d{make_conv3d(rng, cin, cout, gain)};
}
Up2d make_up2d(std::mt19937& rng, int cin, int cout) {
  return Up2d{make_conv2d(rng, cin, cout), make_conv2d(rng, cout, cout, kMergeGain)};
}
Up3d make_up3d(std::mt19937& rng, int cin, int cout) {
  return Up3d{make_conv3d(rng, cin, cout), make_conv3d(rng, cout, cout, kMergeGain)};
}

void push_conv(std::vector<std::pair<std::string, Tensor>>& out, const std::string& name,
               const Tensor& w, const Tensor& b) {
  out.emplace_back(name + ".w", w);
  out.emplace_back(name + ".b", b);
}

}  // namespace

Tensor ResBlock2d::forward(const Tensor& x) const {
  return add(x, c2.forward(leaky_relu(c1.forward(x), kSlope)));
}
Tensor ResBlock3d::forward(const Tensor& x) const {
  return add(x, c2.forward(leaky_relu(c1.forward(x), kSlope)));
}
Tensor Up2d::forward(const Tensor& x) const {
  return c2.forward(leaky_relu(c1.forward(resize_bilinear(x, 2)), kSlope));
}
Tensor Up3d::forward(const Tensor& x) const {
  return c2.forward(leaky_relu(c1.forward(resize_bilinear(x, 2)), kSlope));
}

GridNet3D::GridNet3D(unsigned seed, std::array<int, 3> w) : widths(w) {
  std::mt19937 rng(seed);
  head = make_conv3d(rng, 6, widths[0]);
  chain[0] = make_down3d(rng, widths[0], widths[1]);
  chain[1] = make_down3d(rng, widths[1], widths[2]);
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 5; ++i) blocks[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] =
        make_res3d(rng, widths[static_cast<std::size_t>(r)]);
  }
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 2; ++r) {
      downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] =
          make_down3d(rng, widths[static_cast<std::size_t>(r)], widths[static_cast<std::size_t>(r) + 1],
                      kMergeGain);
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 2; ++r) {
      ups[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] =
          make_up3d(rng, widths[static_cast<std::size_t>(r) + 1], widths[static_cast<std::size_t>(r)]);
    }
  }
  // Unpadded temporal kernel of size 2 collapses T=3 to T=2; a small initial
  // gain keeps the predicted coefficients near zero so early training starts
  // from near-identity motion.
  out.w = he_weights(rng, {4, widths[0], 2, 3, 3}, 0.1f);
  out.b = zero_bias(4);
  out.pad = {0, 1, 1};
}

Tensor GridNet3D::forward(const Tensor& x) const {
  if (x.ndim() != 5) throw DimensionError("GridNet3D: input must be [B,C,T,H,W]");
  if (x.dim(1) != head.w.dim(1)) {
    throw DimensionError("GridNet3D: expected " + std::to_string(head.w.dim(1)) + " channels, got " +
                         std::to_string(x.dim(1)));
  }
  if (x.dim(2) < 2) throw DimensionError("GridNet3D: temporal extent must be at least 2");
  if (x.dim(3) % 4 != 0 || x.dim(4) % 4 != 0) {
    throw DimensionError("GridNet3D: H and W must be divisible by 4");
  }
  std::array<Tensor, 3> row;
  row[0] = head.forward(x);
  row[1] = chain[0].forward(row[0]);
  row[2] = chain[1].forward(row[1]);
  for (int c = 1; c <= 2; ++c) {
    row[0] = blocks[0][static_cast<std::size_t>(c - 1)].forward(row[0]);
    row[1] = add(blocks[1][static_cast<std::size_t>(c - 1)].forward(row[1]),
                 downs[static_cast<std::size_t>(c - 1)][0].forward(row[0]));
    row[2] = add(blocks[2][static_cast<std::size_t>(c - 1)].forward(row[2]),
                 downs[static_cast<std::size_t>(c - 1)][1].forward(row[1]));
  }
  for (int c = 3; c <= 5; ++c) {
    row[2] = blocks[2][static_cast<std::size_t>(c - 1)].forward(row[2]);
    row[1] = add(blocks[1][static_cast<std::size_t>(c - 1)].forward(row[1]),
                 ups[static_cast<std::size_t>(c - 3)][1].forward(row[2]));
    row[0] = add(blocks[0][static_cast<std::size_t>(c - 1)].forward(row[0]),
                 ups[static_cast<std::size_t>(c - 3)][0].forward(row[1]));
  }
  return out.forward(row[0]);
}

std::vector<std::pair<std::string, Tensor>> GridNet3D::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> p;
  push_conv(p, "head", head.w, head.b);
  for (int i = 0; i < 2; ++i) {
    push_conv(p, "chain" + std::to_string(i), chain[static_cast<std::size_t>(i)].conv.w,
              chain[static_cast<std::size_t>(i)].conv.b);
  }
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 5; ++i) {
      const ResBlock3d& blk = blocks[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
      const std::string base = "row" + std::to_string(r) + ".block" + std::to_string(i);
      push_conv(p, base + ".c1", blk.c1.w, blk.c1.b);
      push_conv(p, base + ".c2", blk.c2.w, blk.c2.b);
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 2; ++r) {
      push_conv(p, "col" + std::to_string(c + 1) + ".down" + std::to_string(r + 1),
                downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)].conv.w,
                downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)].conv.b);
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 2; ++r) {
      const Up3d& u = ups[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
      const std::string base = "col" + std::to_string(c + 3) + ".up" + std::to_string(r);
      push_conv(p, base + ".c1", u.c1.w, u.c1.b);
      push_conv(p, base + ".c2", u.c2.w, u.c2.b);
    }
  }
  push_conv(p, "out", out.w, out.b);
  return p;
}

GridNet2DMR::GridNet2DMR(unsigned seed, std::array<int, 3> w) : widths(w) {
  std::mt19937 rng(seed);
  head = make_conv2d(rng, 16, widths[0]);
  chain[0] = make_down2d(rng, widths[0], widths[1]);
  chain[1] = make_down2d(rng, widths[1], widths[2]);
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 5; ++i) blocks[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] =
        make_res2d(rng, widths[static_cast<std::size_t>(r)]);
  }
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 2; ++r) {
      downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] =
          make_down2d(rng, widths[static_cast<std::size_t>(r)], widths[static_cast<std::size_t>(r) + 1],
                      kMergeGain);
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 2; ++r) {
      ups[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] =
          make_up2d(rng, widths[static_cast<std::size_t>(r) + 1], widths[static_cast<std::size_t>(r)]);
    }
  }
  // Near-zero initial offsets/residuals make the refinement start close to
  // the identity.
  out = make_conv2d(rng, widths[0], 8, 0.1f);
}

std::pair<Tensor, Tensor> GridNet2DMR::forward(const Tensor& x) const {
  if (x.ndim() != 4) throw DimensionError("GridNet2DMR: input must be [B,C,H,W]");
  if (x.dim(1) != head.w.dim(1)) {
    throw DimensionError("GridNet2DMR: expected " + std::to_string(head.w.dim(1)) +
                         " channels, got " + std::to_string(x.dim(1)));
  }
  if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0) {
    throw DimensionError("GridNet2DMR: H and W must be divisible by 4");
  }
  std::array<Tensor, 3> row;
  row[0] = head.forward(x);
  row[1] = chain[0].forward(row[0]);
  row[2] = chain[1].forward(row[1]);
  for (int c = 1; c <= 2; ++c) {
    row[0] = blocks[0][static_cast<std::size_t>(c - 1)].forward(row[0]);
    row[1] = add(blocks[1][static_cast<std::size_t>(c - 1)].forward(row[1]),
                 downs[static_cast<std::size_t>(c - 1)][0].forward(row[0]));
    row[2] = add(blocks[2][static_cast<std::size_t>(c - 1)].forward(row[2]),
                 downs[static_cast<std::size_t>(c - 1)][1].forward(row[1]));
  }
  for (int c = 3; c <= 5; ++c) {
    row[2] = blocks[2][static_cast<std::size_t>(c - 1)].forward(row[2]);
    row[1] = add(blocks[1][static_cast<std::size_t>(c - 1)].forward(row[1]),
                 ups[static_cast<std::size_t>(c - 3)][1].forward(row[2]));
    row[0] = add(blocks[0][static_cast<std::size_t>(c - 1)].forward(row[0]),
                 ups[static_cast<std::size_t>(c - 3)][0].forward(row[1]));
  }
  return {out.forward(row[0]), row[0]};
}

std::vector<std::pair<std::string, Tensor>> GridNet2DMR::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> p;
  push_conv(p, "head", head.w, head.b);
  for (int i = 0; i < 2; ++i) {
    push_conv(p, "chain" + std::to_string(i), chain[static_cast<std::size_t>(i)].conv.w,
              chain[static_cast<std::size_t>(i)].conv.b);
  }
  for (int r = 0; r < 3; ++r) {
    for (int i = 0; i < 5; ++i) {
      const ResBlock2d& blk = blocks[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
      const std::string base = "row" + std::to_string(r) + ".block" + std::to_string(i);
      push_conv(p, base + ".c1", blk.c1.w, blk.c1.b);
      push_conv(p, base + ".c2", blk.c2.w, blk.c2.b);
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 2; ++r) {
      push_conv(p, "col" + std::to_string(c + 1) + ".down" + std::to_string(r + 1),
                downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)].conv.w,
                downs[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)].conv.b);
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 2; ++r) {
      const Up2d& u = ups[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
      const std::string base = "col" + std::to_string(c + 3) + ".up" + std::to_string(r);
      push_conv(p, base + ".c1", u.c1.w, u.c1.b);
      push_conv(p, base + ".c2", u.c2.w, u.c2.b);
    }
  }
  push_conv(p, "out", out.w, out.b);
  return p;
}

BMEHead::BMEHead(unsigned seed, int feature_channels) {
  std::mt19937 rng(seed);
  c1 = make_conv2d(rng, 6 + feature_channels, 32);
  c2 = make_conv2d(rng, 32, 16);
  c3 = make_conv2d(rng, 16, 1);
}

Tensor BMEHead::forward(const Tensor& x) const {
  if (x.ndim() != 4) throw DimensionError("BMEHead: input must be [B,C,H,W]");
  if (x.dim(1) != c1.w.dim(1)) {
    throw DimensionError("BMEHead: expected " + std::to_string(c1.w.dim(1)) + " channels, got " +
                         std::to_string(x.dim(1)));
  }
  return sigmoid(c3.forward(leaky_relu(c2.forward(leaky_relu(c1.forward(x), kSlope)), kSlope)));
}

std::vector<std::pair<std::string, Tensor>> BMEHead::named_parameters() const {
  std::vector<std::pair<std::string, Tensor>> p;
  push_conv(p, "c1", c1.w, c1.b);
  push_conv(p, "c2", c2.w, c2.b);
  push_conv(p, "c3", c3.w, c3.b);
  return p;
}

Tensor nme_pack_input(const std::array<FlowField, 3>& fwd, const std::array<FlowField, 3>& bwd,
                      const std::array<OcclusionMap, 3>& occ_fwd,
                      const std::array<OcclusionMap, 3>& occ_bwd) {
  const int W = fwd[0].width, H = fwd[0].height;
  for (int s = 0; s < 3; ++s) {
    const auto& f = fwd[static_cast<std::size_t>(s)];
    const auto& b = bwd[static_cast<std::size_t>(s)];
    const auto& of = occ_fwd[static_cast<std::size_t>(s)];
    const auto& ob = occ_bwd[static_cast<std::size_t>(s)];
    if (f.width != W || f.height != H || b.width != W || b.height != H || of.width != W ||
        of.height != H || ob.width != W || ob.height != H) {
      throw DimensionError("nme_pack_input: all pair maps must share one spatial size");
    }
  }
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  std::vector<float> d(static_cast<std::size_t>(6 * 3 * hw), 0.0f);
  auto at = [&](int c, int s) { return d.data() + (static_cast<std::int64_t>(c) * 3 + s) * hw; };
  for (int s = 0; s < 3; ++s) {
    const auto& f = fwd[static_cast<std::size_t>(s)];
    const auto& b = bwd[static_cast<std::size_t>(s)];
    const auto& of = occ_fwd[static_cast<std::size_t>(s)];
    const auto& ob = occ_bwd[static_cast<std::size_t>(s)];
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::int64_t i = static_cast<std::int64_t>(y) * W + x;
        at(0, s)[i] = f.u(y, x);
        at(1, s)[i] = f.v(y, x);
        at(2, s)[i] = b.u(y, x);
        at(3, s)[i] = b.v(y, x);
        at(4, s)[i] = of.at(y, x);
        at(5, s)[i] = ob.at(y, x);
      }
    }
  }
  return Tensor::from_vector({1, 6, 3, H, W}, std::move(d));
}

MotionCoeffs gridnet3d_forward(const GridNet3D& net, const Tensor& packed) {
  if (packed.ndim() != 5 || packed.dim(0) != 1) {
    throw DimensionError("gridnet3d_forward: input must be [1,6,3,H,W]");
  }
  if (packed.dim(2) != 3) {
    throw DimensionError("gridnet3d_forward: expected 3 temporal slots");
  }
  const std::int64_t H = packed.dim(3), W = packed.dim(4);
  Tensor y = net.forward(packed);  // [1,4,2,H,W]
  Tensor t0 = slice(y, 2, 0, 1);
  Tensor t1 = slice(y, 2, 1, 1);
  auto plane = [&](const Tensor& t, std::int64_t c0) {
    return reshape(slice(t, 1, c0, 2), {2, H, W});
  };
  return MotionCoeffs{plane(t0, 0), plane(t0, 2), plane(t1, 0), plane(t1, 2)};
}

MRResult mr_forward(const GridNet2DMR& net, const Tensor& i0, const Tensor& i1,
                    const Tensor& warped0, const Tensor& warped1, const Tensor& f_t0,
                    const Tensor& f_t1) {
  for (const Tensor* img : {&i0, &i1, &warped0, &warped1}) {
    if (img->ndim() != 3 || img->dim(0) != 3) {
      throw DimensionError("mr_forward: images must be [3,H,W]");
    }
  }
  for (const Tensor* f : {&f_t0, &f_t1}) {
    if (f->ndim() != 3 || f->dim(0) != 2) throw DimensionError("mr_forward: flows must be [2,H,W]");
  }
  const std::int64_t H = i0.dim(1), W = i0.dim(2);
  for (const Tensor* t : {&i1, &warped0, &warped1, &f_t0, &f_t1}) {
    if (t->dim(1) != H || t->dim(2) != W) {
      throw DimensionError("mr_forward: all inputs must share one spatial size");
    }
  }
  Tensor packed = reshape(concat(std::vector<Tensor>{i0, i1, warped0, warped1, f_t0, f_t1}, 0),
                          {1, 16, H, W});
  auto [y, feat] = net.forward(packed);
  auto plane = [&](std::int64_t c0) { return reshape(slice(y, 1, c0, 2), {2, H, W}); };
  MRResult r;
  r.offsets0 = plane(0);
  r.residuals0 = plane(2);
  r.offsets1 = plane(4);
  r.residuals1 = plane(6);
  r.features = reshape(feat, {feat.dim(1), H, W});
  return r;
}

Tensor bme_forward(const BMEHead& head, const Tensor& warped0, const Tensor& warped1,
                   const Tensor& features) {
  for (const Tensor* img : {&warped0, &warped1}) {
    if (img->ndim() != 3 || img->dim(0) != 3) {
      throw DimensionError("bme_forward: warped frames must be [3,H,W]");
    }
  }
  if (features.ndim() != 3) throw DimensionError("bme_forward: features must be [F,H,W]");
  const std::int64_t H = warped0.dim(1), W = warped0.dim(2);
  if (warped1.dim(1) != H || warped1.dim(2) != W || features.dim(1) != H || features.dim(2) != W) {
    throw DimensionError("bme_forward: all inputs must share one spatial size");
  }
  Tensor packed = reshape(concat(std::vector<Tensor>{warped0, warped1, features}, 0),
                          {1, 6 + features.dim(0), H, W});
  return reshape(head.forward(packed), {1, H, W});
}

std::int64_t param_count(const std::vector<std::pair<std::string, Tensor>>& params) {
  std::int64_t n = 0;
  for (const auto& [name, t] : params) n += t.numel();
  return n;
}
std::int64_t param_count(const Conv2d& layer) { return layer.w.numel() + layer.b.numel(); }
std::int64_t param_count(const GridNet3D& net) { return param_count(net.named_parameters()); }
std::int64_t param_count(const GridNet2DMR& net) { return param_count(net.named_parameters()); }
std::int64_t param_count(const BMEHead& head) { return param_count(head.named_parameters()); }

}  // namespace vfikit
