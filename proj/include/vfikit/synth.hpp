#pragma once

#include <string>
#include <vector>

#include "vfikit/image.hpp"
#include "vfikit/motion.hpp"

namespace vfikit {

enum class ObjectShape { Rectangle, Disk };

// A rigidly translating textured object. The center follows
// x(t) = x0 + v t + (a/2) t^2 with the frame interval as the time unit.
struct ObjectSpec {
  ObjectShape shape = ObjectShape::Rectangle;
  float half_w = 5.0f;  // rectangle half extents; disks use half_w as radius
  float half_h = 5.0f;
  unsigned texture_seed = 0;
  int z = 0;  // higher z draws on top; ties break toward later list order
  float x0 = 0.0f, y0 = 0.0f;
  float vx = 0.0f, vy = 0.0f;
  float ax = 0.0f, ay = 0.0f;

  float center_x(float t) const { return x0 + quad_displacement(vx, 0.5f * ax, t); }
  float center_y(float t) const { return y0 + quad_displacement(vy, 0.5f * ay, t); }
  bool contains_local(float lx, float ly) const;
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  unsigned background_seed = 1;
  std::vector<ObjectSpec> objects;

  // ContractError unless every object stays at least 1 px inside the canvas
  // for all t in [-1, 2] (checked via the trajectory extremes, which for a
  // quadratic lie at the endpoints or the vertex).
  void validate() const;
  // Index of the topmost object containing the point at time t, or -1 for
  // background.
  int owner_at(float x, float y, float t) const;
};

// Deterministic two-octave value noise in [0,1]; the texture primitive.
float value_noise(unsigned seed, float x, float y);

// Anti-aliased render (4x4 subsamples per pixel, box filter). Objects carry
// their texture with them; the background is static.
Image render_scene(const SceneSpec& spec, float t);

// Exact flow from frame time from_t to to_t: each pixel moves with the
// object owning it at from_t (background pixels have zero motion). The
// occlusion map is 1 where the landing point is covered by a strictly
// higher-z object at to_t or leaves the pixel grid.
struct FlowWithOcclusion {
  FlowField flow;
  OcclusionMap occ;
};
FlowWithOcclusion analytic_flow(const SceneSpec& spec, float from_t, float to_t);

// Exact quadratic coefficients per pixel: anchor 0 uses ownership at t=0
// (alpha0 = v, beta0 = a/2), anchor 1 ownership at t=1 (alpha1 = -(v+a),
// beta1 = a/2). Shares the scalar arithmetic path with analytic_flow so
// evaluating these coefficients at the far frame reproduces the analytic
// flow bit-exactly.
MotionCoeffs gt_coeffs(const SceneSpec& spec);

// Literal reversal reference: for every output pixel, loop over all source
// pixels and average the negated flows whose landing cell covers the output
// pixel, Gaussian-weighted. O(H^2 W^2); test oracle only.
FlowField brute_force_reverse(const FlowField& f_fwd);

// Everything the pipeline consumes for one interpolation task.
struct Quad {
  Image frames[4];   // t = -1, 0, 1, 2
  Image gt_frame;    // rendered at t (synthetic quads only)
  float t = 0.5f;
  // Pair index 0 is (-1,0), 1 is (0,1), 2 is (1,2); fwd runs earlier->later.
  FlowField flow_fwd[3];
  FlowField flow_bwd[3];
  OcclusionMap occ_fwd[3];
  OcclusionMap occ_bwd[3];
  // Exact backward intermediate flows, ownership decided at time t.
  FlowField gt_flow_t0;
  FlowField gt_flow_t1;
  bool has_gt_coeffs = false;
  MotionCoeffs gt;
  bool synthetic = false;
  std::string source;  // generator tag or manifest path
  SceneSpec spec;      // kept for synthetic quads
};

// Builds the full quad for a scene. The emitted pair flows mimic a flow
// estimator: where one object's pixels slide under a nearer object, the flow
// continues the occluder's motion (an estimator cannot track through it).
// Background pixels keep their true zero motion even when about to be
// covered, as a smoothness prior would fill them, and canvas exits keep the
// true flow. analytic_flow itself stays exact and the ground-truth
// coefficient maps are unaffected, so oracle coefficients beat the
// closed-form fit exactly on scenes with object-over-object occlusion.
Quad make_quad(const SceneSpec& spec, float t);

enum class Difficulty { Linear, Moderate, Occlusion };
Difficulty difficulty_from_string(const std::string& s);
std::string to_string(Difficulty d);

// Deterministic for (n, seed, size); difficulty controls motion ranges and
// object overlap. All quads target t = 0.5.
std::vector<Quad> make_dataset(int n, unsigned seed, int size, Difficulty difficulty);
// The scene list behind make_dataset, for callers that render lazily.
std::vector<SceneSpec> make_scenes(int n, unsigned seed, int size, Difficulty difficulty);

}  // namespace vfikit
