#include "vfikit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "vfikit/errors.hpp"

namespace vfikit {

namespace {

std::uint32_t hash2i(std::uint32_t seed, std::int32_t x, std::int32_t y) {
  std::uint32_t h = seed + 0x9E3779B9u;
  h ^= static_cast<std::uint32_t>(x) * 0x85EBCA77u;
  h = (h ^ (h >> 13)) * 0xC2B2AE3Du;
  h ^= static_cast<std::uint32_t>(y) * 0x27D4EB2Fu;
  h = (h ^ (h >> 16)) * 0x165667B1u;
  return h ^ (h >> 15);
}

float lattice(std::uint32_t seed, std::int32_t x, std::int32_t y) {
  return static_cast<float>(hash2i(seed, x, y)) * (1.0f / 4294967296.0f);
}

float smooth_noise(std::uint32_t seed, float x, float y) {
  const float fx = std::floor(x), fy = std::floor(y);
  const std::int32_t ix = static_cast<std::int32_t>(fx);
  const std::int32_t iy = static_cast<std::int32_t>(fy);
  float tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0f - 2.0f * tx);
  ty = ty * ty * (3.0f - 2.0f * ty);
  const float v00 = lattice(seed, ix, iy), v10 = lattice(seed, ix + 1, iy);
  const float v01 = lattice(seed, ix, iy + 1), v11 = lattice(seed, ix + 1, iy + 1);
  const float a = v00 + (v10 - v00) * tx;
  const float b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

// Texture value for one channel; coordinates are object-local for objects and
// canvas coordinates for the background. Wavelengths stay long so bilinear
// warps of the rendering reproduce it to well under 2/255.
float texel(std::uint32_t seed, int channel, float x, float y) {
  const std::uint32_t s = seed * 0x9E3779B1u + static_cast<std::uint32_t>(channel) * 0x7F4A7C15u;
  const float n = 0.7f * smooth_noise(s, x * (1.0f / 16.0f), y * (1.0f / 16.0f)) +
                  0.3f * smooth_noise(s ^ 0xA511E9B3u, x * 0.125f, y * 0.125f);
  return 0.12f + 0.78f * n;
}

float vel_at(float v, float a, float t) { return v + a * t; }

// Center displacement of an object from from_t to to_t, on the same scalar
// path as quadratic-coefficient evaluation so the two agree bit for bit.
float obj_disp(float v, float a, float from_t, float to_t) {
  return quad_displacement(vel_at(v, a, from_t), 0.5f * a, to_t - from_t);
}

// True iff object i paints over object j (background is below everything).
bool paints_over(const SceneSpec& spec, int i, int j) {
  if (i < 0) return false;
  if (j < 0) return true;
  const ObjectSpec& a = spec.objects[static_cast<std::size_t>(i)];
  const ObjectSpec& b = spec.objects[static_cast<std::size_t>(j)];
  return a.z > b.z || (a.z == b.z && i > j);
}

void disp_extremes(float v, float a, double& dmin, double& dmax) {
  auto d = [&](double t) { return static_cast<double>(v) * t + 0.5 * static_cast<double>(a) * t * t; };
  dmin = std::min(d(-1.0), d(2.0));
  dmax = std::max(d(-1.0), d(2.0));
  if (a != 0.0f) {
    const double tv = -static_cast<double>(v) / static_cast<double>(a);
    if (tv > -1.0 && tv < 2.0) {
      dmin = std::min(dmin, d(tv));
      dmax = std::max(dmax, d(tv));
    }
  }
}

}  // namespace

bool ObjectSpec::contains_local(float lx, float ly) const {
  if (shape == ObjectShape::Rectangle) {
    return std::fabs(lx) <= half_w && std::fabs(ly) <= half_h;
  }
  return lx * lx + ly * ly <= half_w * half_w;
}

void SceneSpec::validate() const {
  if (width < 8 || height < 8) throw DimensionError("SceneSpec: canvas must be at least 8x8");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const ObjectSpec& o = objects[i];
    if (o.half_w <= 0.0f || o.half_h <= 0.0f) {
      throw ContractError("SceneSpec: object " + std::to_string(i) + " has non-positive extent");
    }
    double dminx, dmaxx, dminy, dmaxy;
    disp_extremes(o.vx, o.ax, dminx, dmaxx);
    disp_extremes(o.vy, o.ay, dminy, dmaxy);
    const double hx = o.half_w;
    const double hy = (o.shape == ObjectShape::Disk) ? o.half_w : o.half_h;
    const bool inside = o.x0 + dminx - hx >= 1.0 && o.x0 + dmaxx + hx <= width - 2.0 &&
                        o.y0 + dminy - hy >= 1.0 && o.y0 + dmaxy + hy <= height - 2.0;
    if (!inside) {
      throw ContractError("SceneSpec: object " + std::to_string(i) +
                          " leaves the 1 px canvas margin for some t in [-1, 2]");
    }
  }
}

int SceneSpec::owner_at(float x, float y, float t) const {
  int best = -1;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const ObjectSpec& o = objects[i];
    if (!o.contains_local(x - o.center_x(t), y - o.center_y(t))) continue;
    const int idx = static_cast<int>(i);
    if (best < 0 || paints_over(*this, idx, best)) best = idx;
  }
  return best;
}

float value_noise(unsigned seed, float x, float y) {
  return 0.7f * smooth_noise(seed, x * (1.0f / 16.0f), y * (1.0f / 16.0f)) +
         0.3f * smooth_noise(seed ^ 0xA511E9B3u, x * 0.125f, y * 0.125f);
}

Image render_scene(const SceneSpec& spec, float t) {
  spec.validate();
  const int W = spec.width, H = spec.height;
  Image img(W, H, 3);
  static const float sub[4] = {-0.375f, -0.125f, 0.125f, 0.375f};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      float acc[3] = {0.0f, 0.0f, 0.0f};
      for (float oy : sub) {
        for (float ox : sub) {
          const float sx = static_cast<float>(x) + ox;
          const float sy = static_cast<float>(y) + oy;
          const int k = spec.owner_at(sx, sy, t);
          if (k < 0) {
            for (int c = 0; c < 3; ++c) acc[c] += texel(spec.background_seed, c, sx, sy);
          } else {
            const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k)];
            const float lx = sx - o.center_x(t), ly = sy - o.center_y(t);
            for (int c = 0; c < 3; ++c) acc[c] += texel(o.texture_seed, c, lx, ly);
          }
        }
      }
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = acc[c] * (1.0f / 16.0f);
    }
  }
  return img;
}

FlowWithOcclusion analytic_flow(const SceneSpec& spec, float from_t, float to_t) {
  spec.validate();
  const int W = spec.width, H = spec.height;
  FlowWithOcclusion out{FlowField(W, H), OcclusionMap(W, H)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int k = spec.owner_at(static_cast<float>(x), static_cast<float>(y), from_t);
      float ux = 0.0f, uy = 0.0f;
      if (k >= 0) {
        const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k)];
        ux = obj_disp(o.vx, o.ax, from_t, to_t);
        uy = obj_disp(o.vy, o.ay, from_t, to_t);
      }
      out.flow.u(y, x) = ux;
      out.flow.v(y, x) = uy;
      const float lx = static_cast<float>(x) + ux;
      const float ly = static_cast<float>(y) + uy;
      float occ = 0.0f;
      if (lx < 0.0f || lx > static_cast<float>(W - 1) || ly < 0.0f || ly > static_cast<float>(H - 1)) {
        occ = 1.0f;
      } else {
        const int j = spec.owner_at(lx, ly, to_t);
        if (j != k && paints_over(spec, j, k)) occ = 1.0f;
      }
      out.occ.at(y, x) = occ;
    }
  }
  return out;
}

MotionCoeffs gt_coeffs(const SceneSpec& spec) {
  spec.validate();
  const int W = spec.width, H = spec.height;
  const std::int64_t hw = static_cast<std::int64_t>(W) * H;
  std::vector<float> a0(static_cast<std::size_t>(2 * hw), 0.0f), b0 = a0, a1 = a0, b1 = a0;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * W + x);
      const std::size_t iv = i + static_cast<std::size_t>(hw);
      const int k0 = spec.owner_at(static_cast<float>(x), static_cast<float>(y), 0.0f);
      if (k0 >= 0) {
        const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k0)];
        a0[i] = vel_at(o.vx, o.ax, 0.0f);
        a0[iv] = vel_at(o.vy, o.ay, 0.0f);
        b0[i] = 0.5f * o.ax;
        b0[iv] = 0.5f * o.ay;
      }
      const int k1 = spec.owner_at(static_cast<float>(x), static_cast<float>(y), 1.0f);
      if (k1 >= 0) {
        const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k1)];
        a1[i] = -vel_at(o.vx, o.ax, 1.0f);
        a1[iv] = -vel_at(o.vy, o.ay, 1.0f);
        b1[i] = 0.5f * o.ax;
        b1[iv] = 0.5f * o.ay;
      }
    }
  }
  const std::vector<std::int64_t> shape{2, H, W};
  return MotionCoeffs{Tensor::from_vector(shape, a0), Tensor::from_vector(shape, b0),
                      Tensor::from_vector(shape, a1), Tensor::from_vector(shape, b1)};
}

FlowField brute_force_reverse(const FlowField& f_fwd) {
  const int W = f_fwd.width, H = f_fwd.height;
  FlowField out(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double nu = 0.0, nv = 0.0, den = 0.0;
      for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
          const double fx = f_fwd.u(py, px), fy = f_fwd.v(py, px);
          const double qx = px + fx, qy = py + fy;
          const std::int64_t x0 = static_cast<std::int64_t>(std::floor(qx));
          const std::int64_t y0 = static_cast<std::int64_t>(std::floor(qy));
          if ((x != x0 && x != x0 + 1) || (y != y0 && y != y0 + 1)) continue;
          const double dx = x - qx, dy = y - qy;
          const double w = std::exp(-(dx * dx + dy * dy));
          nu += w * (-fx);
          nv += w * (-fy);
          den += w;
        }
      }
      if (den > 0.0) {
        out.u(y, x) = static_cast<float>(nu / den);
        out.v(y, x) = static_cast<float>(nv / den);
      }
    }
  }
  return out;
}

namespace {

// Estimator-like pair flow: where one object's pixels slide under a nearer
// object, the emitted flow continues the occluder's motion (a real estimator
// cannot track through the occluder). Background pixels about to be covered
// keep their true zero motion, matching the dominant-motion fill a smoothness
// prior produces; canvas exits also keep the true flow.
FlowWithOcclusion estimator_flow(const SceneSpec& spec, float from_t, float to_t) {
  FlowWithOcclusion fo = analytic_flow(spec, from_t, to_t);
  const int W = spec.width, H = spec.height;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      if (fo.occ.at(y, x) == 0.0f) continue;
      const int k = spec.owner_at(static_cast<float>(x), static_cast<float>(y), from_t);
      if (k < 0) continue;
      const float lx = static_cast<float>(x) + fo.flow.u(y, x);
      const float ly = static_cast<float>(y) + fo.flow.v(y, x);
      if (lx < 0.0f || lx > static_cast<float>(W - 1) || ly < 0.0f || ly > static_cast<float>(H - 1)) {
        continue;
      }
      const int j = spec.owner_at(lx, ly, to_t);
      if (j < 0 || j == k || !paints_over(spec, j, k)) continue;
      const ObjectSpec& o = spec.objects[static_cast<std::size_t>(j)];
      fo.flow.u(y, x) = obj_disp(o.vx, o.ax, from_t, to_t);
      fo.flow.v(y, x) = obj_disp(o.vy, o.ay, from_t, to_t);
    }
  }
  return fo;
}

FlowField backward_gt_flow(const SceneSpec& spec, float t, float target_t) {
  const int W = spec.width, H = spec.height;
  FlowField f(W, H);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int k = spec.owner_at(static_cast<float>(x), static_cast<float>(y), t);
      if (k < 0) continue;
      const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k)];
      f.u(y, x) = obj_disp(o.vx, o.ax, t, target_t);
      f.v(y, x) = obj_disp(o.vy, o.ay, t, target_t);
    }
  }
  return f;
}

}  // namespace

Quad make_quad(const SceneSpec& spec, float t) {
  if (!(t > 0.0f && t < 1.0f)) throw ContractError("make_quad: t must lie strictly inside (0, 1)");
  spec.validate();
  Quad q;
  q.spec = spec;
  q.t = t;
  q.synthetic = true;
  q.source = "synthetic";
  const float times[4] = {-1.0f, 0.0f, 1.0f, 2.0f};
  for (int i = 0; i < 4; ++i) q.frames[i] = render_scene(spec, times[i]);
  q.gt_frame = render_scene(spec, t);
  for (int p = 0; p < 3; ++p) {
    FlowWithOcclusion fwd = estimator_flow(spec, times[p], times[p + 1]);
    FlowWithOcclusion bwd = estimator_flow(spec, times[p + 1], times[p]);
    q.flow_fwd[p] = std::move(fwd.flow);
    q.occ_fwd[p] = std::move(fwd.occ);
    q.flow_bwd[p] = std::move(bwd.flow);
    q.occ_bwd[p] = std::move(bwd.occ);
  }
  q.gt_flow_t0 = backward_gt_flow(spec, t, 0.0f);
  q.gt_flow_t1 = backward_gt_flow(spec, t, 1.0f);
  q.gt = gt_coeffs(spec);
  q.has_gt_coeffs = true;
  return q;
}

Difficulty difficulty_from_string(const std::string& s) {
  if (s == "linear") return Difficulty::Linear;
  if (s == "moderate") return Difficulty::Moderate;
  if (s == "occlusion") return Difficulty::Occlusion;
  throw ContractError("unknown difficulty '" + s + "' (expected linear|moderate|occlusion)");
}

std::string to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Linear: return "linear";
    case Difficulty::Moderate: return "moderate";
    default: return "occlusion";
  }
}

namespace {

struct Rng {
  std::mt19937 gen;
  explicit Rng(std::mt19937 g) : gen(g) {}
  float uni(float a, float b) { return std::uniform_real_distribution<float>(a, b)(gen); }
  bool coin(double p) { return std::bernoulli_distribution(p)(gen); }
  std::uint32_t bits() { return gen(); }
};

float circumradius(const ObjectSpec& o) {
  if (o.shape == ObjectShape::Disk) return o.half_w;
  return std::hypot(o.half_w, o.half_h);
}

// Valid center interval along one axis given the trajectory and extent; false
// when the motion cannot fit the canvas.
bool center_range(float v, float a, float half, int extent, float& lo, float& hi) {
  double dmin, dmax;
  disp_extremes(v, a, dmin, dmax);
  lo = static_cast<float>(1.05 + half - dmin);
  hi = static_cast<float>(extent - 2.05 - half - dmax);
  return lo <= hi;
}

bool place_object(Rng& rng, int w, int h, ObjectSpec& o) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    float lox, hix, loy, hiy;
    if (center_range(o.vx, o.ax, o.half_w, w, lox, hix) &&
        center_range(o.vy, o.ay, o.shape == ObjectShape::Disk ? o.half_w : o.half_h, h, loy, hiy)) {
      o.x0 = rng.uni(lox, hix);
      o.y0 = rng.uni(loy, hiy);
      return true;
    }
    o.vx *= 0.5f;
    o.vy *= 0.5f;
    o.ax *= 0.5f;
    o.ay *= 0.5f;
  }
  return false;
}

bool separated(const ObjectSpec& a, const ObjectSpec& b, float t_lo, float t_hi, float margin) {
  const float need = circumradius(a) + circumradius(b) + margin;
  for (float t = t_lo; t <= t_hi + 1e-6f; t += 0.05f) {
    const float dx = a.center_x(t) - b.center_x(t);
    const float dy = a.center_y(t) - b.center_y(t);
    if (dx * dx + dy * dy < need * need) return false;
  }
  return true;
}

// Pixels of one object whose view toward to_t is blocked by a nearer object;
// used to confirm occlusion-difficulty scenes really contain occlusion.
int object_occlusion_count(const SceneSpec& spec, float from_t, float to_t) {
  int count = 0;
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const int k = spec.owner_at(static_cast<float>(x), static_cast<float>(y), from_t);
      if (k < 0) continue;
      const ObjectSpec& o = spec.objects[static_cast<std::size_t>(k)];
      const float lx = static_cast<float>(x) + obj_disp(o.vx, o.ax, from_t, to_t);
      const float ly = static_cast<float>(y) + obj_disp(o.vy, o.ay, from_t, to_t);
      if (lx < 0.0f || lx > static_cast<float>(spec.width - 1) || ly < 0.0f ||
          ly > static_cast<float>(spec.height - 1)) {
        continue;
      }
      const int j = spec.owner_at(lx, ly, to_t);
      if (j >= 0 && j != k && paints_over(spec, j, k)) ++count;
    }
  }
  return count;
}

SceneSpec linear_scene(Rng& rng, int size, float scale) {
  SceneSpec spec;
  spec.width = spec.height = size;
  spec.background_seed = rng.bits();
  const int want = rng.coin(0.6) ? 2 : 1;
  for (int k = 0; k < want; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      ObjectSpec o;
      o.shape = rng.coin(0.5) ? ObjectShape::Rectangle : ObjectShape::Disk;
      o.half_w = std::max(2.0f, rng.uni(4.0f, 8.0f) * scale);
      o.half_h = (o.shape == ObjectShape::Disk) ? o.half_w : std::max(2.0f, rng.uni(4.0f, 8.0f) * scale);
      o.texture_seed = rng.bits();
      o.z = k;
      o.vx = rng.uni(-2.0f, 2.0f);
      o.vy = rng.uni(-2.0f, 2.0f);
      if (!place_object(rng, size, size, o)) continue;
      bool ok = true;
      for (const ObjectSpec& prev : spec.objects) {
        if (!separated(prev, o, -1.0f, 2.0f, 1.0f)) { ok = false; break; }
      }
      if (ok) { spec.objects.push_back(o); break; }
    }
  }
  return spec;
}

SceneSpec moderate_scene(Rng& rng, int size, float scale) {
  SceneSpec spec;
  spec.width = spec.height = size;
  spec.background_seed = rng.bits();
  const int want = rng.coin(0.75) ? 2 : 1;
  for (int k = 0; k < want; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      ObjectSpec o;
      o.shape = rng.coin(0.5) ? ObjectShape::Rectangle : ObjectShape::Disk;
      o.half_w = std::max(2.0f, rng.uni(4.0f, 9.0f) * scale);
      o.half_h = (o.shape == ObjectShape::Disk) ? o.half_w : std::max(2.0f, rng.uni(4.0f, 9.0f) * scale);
      o.texture_seed = rng.bits();
      o.z = k;
      o.vx = rng.uni(-1.8f, 1.8f);
      o.vy = rng.uni(-1.8f, 1.8f);
      o.ax = rng.uni(-0.6f, 0.6f);
      o.ay = rng.uni(-0.6f, 0.6f);
      if (!place_object(rng, size, size, o)) continue;
      // Objects stay apart around the interpolation window; overlap may
      // still occur near the outer frames, keeping occlusion limited.
      bool ok = true;
      for (const ObjectSpec& prev : spec.objects) {
        if (!separated(prev, o, -0.15f, 1.15f, 1.0f)) { ok = false; break; }
      }
      if (ok) { spec.objects.push_back(o); break; }
    }
  }
  return spec;
}

SceneSpec occlusion_scene(Rng& rng, int size, float scale) {
  for (int attempt = 0; attempt < 20; ++attempt) {
    SceneSpec spec;
    spec.width = spec.height = size;
    spec.background_seed = rng.bits();

    ObjectSpec blocker;
    blocker.shape = rng.coin(0.5) ? ObjectShape::Rectangle : ObjectShape::Disk;
    blocker.half_w = std::max(3.0f, rng.uni(6.0f, 9.0f) * scale);
    blocker.half_h = (blocker.shape == ObjectShape::Disk) ? blocker.half_w
                                                          : std::max(3.0f, rng.uni(6.0f, 9.0f) * scale);
    blocker.texture_seed = rng.bits();
    blocker.z = 1;
    blocker.vx = rng.uni(-0.6f, 0.6f);
    blocker.vy = rng.uni(-0.6f, 0.6f);
    blocker.x0 = size * 0.5f + rng.uni(-4.0f, 4.0f) * scale;
    blocker.y0 = size * 0.5f + rng.uni(-4.0f, 4.0f) * scale;

    ObjectSpec crosser;
    crosser.shape = rng.coin(0.5) ? ObjectShape::Rectangle : ObjectShape::Disk;
    crosser.half_w = std::max(2.5f, rng.uni(5.0f, 8.0f) * scale);
    crosser.half_h = (crosser.shape == ObjectShape::Disk) ? crosser.half_w
                                                          : std::max(2.5f, rng.uni(5.0f, 8.0f) * scale);
    crosser.texture_seed = rng.bits();
    crosser.z = 0;
    const float ang = rng.uni(0.0f, 6.2831853f);
    const float speed = std::max(1.2f, rng.uni(2.2f, 3.2f) * scale);
    crosser.vx = speed * std::cos(ang);
    crosser.vy = speed * std::sin(ang);
    crosser.ax = rng.uni(-0.5f, 0.5f) * scale;
    crosser.ay = rng.uni(-0.5f, 0.5f) * scale;
    const float d0 = (circumradius(crosser) + circumradius(blocker)) * rng.uni(0.35f, 0.75f);
    crosser.x0 = blocker.x0 - std::cos(ang) * d0;
    crosser.y0 = blocker.y0 - std::sin(ang) * d0;

    SceneSpec tentative = spec;
    tentative.objects = {crosser, blocker};
    bool fits = true;
    for (const ObjectSpec& o : tentative.objects) {
      float lox, hix, loy, hiy;
      if (!center_range(o.vx, o.ax, o.half_w, size, lox, hix) ||
          !center_range(o.vy, o.ay, o.shape == ObjectShape::Disk ? o.half_w : o.half_h, size, loy,
                        hiy) ||
          o.x0 < lox || o.x0 > hix || o.y0 < loy || o.y0 > hiy) {
        fits = false;
        break;
      }
    }
    if (!fits) continue;
    if (object_occlusion_count(tentative, 0.0f, 1.0f) + object_occlusion_count(tentative, 1.0f, 0.0f) <
        20) {
      continue;
    }
    return tentative;
  }
  // Deterministic fallback: a slow blocker over a crosser moving along x.
  SceneSpec spec;
  spec.width = spec.height = size;
  spec.background_seed = rng.bits();
  ObjectSpec blocker;
  blocker.half_w = blocker.half_h = std::max(3.0f, 8.0f * scale);
  blocker.texture_seed = rng.bits();
  blocker.z = 1;
  blocker.x0 = blocker.y0 = size * 0.5f;
  ObjectSpec crosser;
  crosser.half_w = crosser.half_h = std::max(2.5f, 6.0f * scale);
  crosser.texture_seed = rng.bits();
  crosser.z = 0;
  crosser.vx = std::max(1.2f, 2.5f * scale);
  crosser.x0 = blocker.x0 - (blocker.half_w + crosser.half_w) * 0.5f;
  crosser.y0 = size * 0.5f;
  spec.objects = {crosser, blocker};
  return spec;
}

}  // namespace

std::vector<SceneSpec> make_scenes(int n, unsigned seed, int size, Difficulty difficulty) {
  if (n < 0) throw ContractError("make_scenes: n must be non-negative");
  if (size < 8) throw DimensionError("make_scenes: size must be at least 8");
  std::seed_seq seq{seed, static_cast<unsigned>(size), static_cast<unsigned>(difficulty) + 101u};
  Rng rng{std::mt19937(seq)};
  const float scale = static_cast<float>(size) / 64.0f;
  std::vector<SceneSpec> scenes;
  scenes.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    SceneSpec spec;
    switch (difficulty) {
      case Difficulty::Linear: spec = linear_scene(rng, size, scale); break;
      case Difficulty::Moderate: spec = moderate_scene(rng, size, scale); break;
      default: spec = occlusion_scene(rng, size, scale); break;
    }
    spec.validate();
    scenes.push_back(std::move(spec));
  }
  return scenes;
}

std::vector<Quad> make_dataset(int n, unsigned seed, int size, Difficulty difficulty) {
  std::vector<SceneSpec> scenes = make_scenes(n, seed, size, difficulty);
  std::vector<Quad> quads;
  quads.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    Quad q = make_quad(scenes[i], 0.5f);
    q.source = "synthetic:" + to_string(difficulty) + ":" + std::to_string(i);
    quads.push_back(std::move(q));
  }
  return quads;
}

}  // namespace vfikit
