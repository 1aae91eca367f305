#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "vfikit/errors.hpp"
#include "vfikit/motion.hpp"
#include "vfikit/nets.hpp"
#include "vfikit/synth.hpp"

using namespace vfikit;

namespace {

void zero_params(const std::vector<std::pair<std::string, Tensor>>& params) {
  for (const auto& [name, t] : params) {
    Tensor handle = t;
    std::fill(handle.data(), handle.data() + handle.numel(), 0.0f);
  }
}

Tensor rand_f(std::vector<std::int64_t> shape, unsigned seed, float lo, float hi) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  std::int64_t n = 1;
  for (std::int64_t s : shape) n *= s;
  std::vector<float> d(static_cast<std::size_t>(n));
  for (float& v : d) v = dist(rng);
  return Tensor::from_vector(shape, d);
}

Tensor project_loss(const Tensor& out, unsigned seed) {
  return sum(mul(out, rand_f(out.shape(), seed, -1.0f, 1.0f)));
}

bool any_nonzero(const Tensor& g) {
  for (std::int64_t i = 0; i < g.numel(); ++i) {
    if (g.data()[i] != 0.0f) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("input packing: zeros, bit-exact round trip, slot statistics") {
  const int W = 10, H = 8;
  std::array<FlowField, 3> fwd{FlowField(W, H), FlowField(W, H), FlowField(W, H)};
  std::array<FlowField, 3> bwd = fwd;
  std::array<OcclusionMap, 3> ofwd{OcclusionMap(W, H), OcclusionMap(W, H), OcclusionMap(W, H)};
  std::array<OcclusionMap, 3> obwd = ofwd;

  Tensor zeros = nme_pack_input(fwd, bwd, ofwd, obwd);
  REQUIRE(zeros.shape() == std::vector<std::int64_t>({1, 6, 3, H, W}));
  for (std::int64_t i = 0; i < zeros.numel(); ++i) REQUIRE(zeros.data()[i] == 0.0f);

  std::mt19937 rng(4);
  std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
  for (int s = 0; s < 3; ++s) {
    for (float& v : fwd[static_cast<std::size_t>(s)].data) v = dist(rng);
    for (float& v : bwd[static_cast<std::size_t>(s)].data) v = dist(rng);
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        ofwd[static_cast<std::size_t>(s)].at(y, x) = (x + y + s) % 3 == 0 ? 1.0f : 0.0f;
        obwd[static_cast<std::size_t>(s)].at(y, x) = (x * y + s) % 4 == 0 ? 1.0f : 0.0f;
      }
    }
  }
  Tensor packed = nme_pack_input(fwd, bwd, ofwd, obwd);

  // Slot 1 (pair 0->1), channels 0-1 must be F_{0->1} bit for bit.
  const std::int64_t hw = static_cast<std::int64_t>(H) * W;
  auto at = [&](int c, int s, int y, int x) {
    return packed.data()[((static_cast<std::int64_t>(c) * 3 + s) * H + y) * W + x];
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      REQUIRE(at(0, 1, y, x) == fwd[1].u(y, x));
      REQUIRE(at(1, 1, y, x) == fwd[1].v(y, x));
      REQUIRE(at(2, 1, y, x) == bwd[1].u(y, x));
      REQUIRE(at(3, 1, y, x) == bwd[1].v(y, x));
      REQUIRE(at(4, 1, y, x) == ofwd[1].at(y, x));
      REQUIRE(at(5, 1, y, x) == obwd[1].at(y, x));
    }
  }

  // Slot-wise mean of channel 0 equals the mean u displacement of that pair.
  for (int s = 0; s < 3; ++s) {
    double want = 0.0, got = 0.0;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        want += fwd[static_cast<std::size_t>(s)].u(y, x);
        got += at(0, s, y, x);
      }
    }
    CHECK(got / hw == doctest::Approx(want / hw).epsilon(1e-12));
  }

  std::array<FlowField, 3> bad = fwd;
  bad[2] = FlowField(W + 1, H);
  CHECK_THROWS_AS(nme_pack_input(bad, bwd, ofwd, obwd), DimensionError);
}

TEST_CASE("estimator network: shape contract and finite outputs") {
  GridNet3D net(7);
  for (int hw : {32, 64}) {
    Tensor x = rand_f({1, 6, 3, hw, hw}, 11, -3.0f, 3.0f);
    Tensor y = net.forward(x);
    REQUIRE(y.shape() == std::vector<std::int64_t>({1, 4, 2, hw, hw}));
    for (std::int64_t i = 0; i < y.numel(); ++i) REQUIRE(std::isfinite(y.data()[i]));

    MotionCoeffs c = gridnet3d_forward(net, x);
    REQUIRE(c.alpha0.shape() == std::vector<std::int64_t>({2, hw, hw}));
    REQUIRE(c.beta0.shape() == std::vector<std::int64_t>({2, hw, hw}));
    REQUIRE(c.alpha1.shape() == std::vector<std::int64_t>({2, hw, hw}));
    REQUIRE(c.beta1.shape() == std::vector<std::int64_t>({2, hw, hw}));

    // Slicing must agree with the raw output layout.
    CHECK(c.alpha0.data()[0] == y.data()[0]);
  }

  CHECK_THROWS_AS(net.forward(rand_f({1, 6, 3, 30, 32}, 1, 0, 1)), DimensionError);
  CHECK_THROWS_AS(net.forward(rand_f({1, 5, 3, 32, 32}, 1, 0, 1)), DimensionError);
  CHECK_THROWS_AS(gridnet3d_forward(net, rand_f({1, 6, 2, 32, 32}, 1, 0, 1)), DimensionError);
  CHECK_THROWS_AS(gridnet3d_forward(net, rand_f({2, 6, 3, 16, 16}, 1, 0, 1)), DimensionError);
}

TEST_CASE("zero-weight networks produce their trivial outputs") {
  GridNet3D nme(3);
  zero_params(nme.named_parameters());
  Tensor x = rand_f({1, 6, 3, 16, 16}, 5, -2.0f, 2.0f);
  MotionCoeffs c = gridnet3d_forward(nme, x);
  for (const Tensor* t : {&c.alpha0, &c.beta0, &c.alpha1, &c.beta1}) {
    for (std::int64_t i = 0; i < t->numel(); ++i) REQUIRE(t->data()[i] == 0.0f);
  }

  GridNet2DMR mr(4);
  zero_params(mr.named_parameters());
  Tensor i0 = rand_f({3, 16, 16}, 6, 0.0f, 1.0f);
  Tensor i1 = rand_f({3, 16, 16}, 7, 0.0f, 1.0f);
  Tensor w0 = rand_f({3, 16, 16}, 8, 0.0f, 1.0f);
  Tensor w1 = rand_f({3, 16, 16}, 9, 0.0f, 1.0f);
  Tensor f0 = rand_f({2, 16, 16}, 10, -1.0f, 1.0f);
  Tensor f1 = rand_f({2, 16, 16}, 11, -1.0f, 1.0f);
  MRResult r = mr_forward(mr, i0, i1, w0, w1, f0, f1);
  for (const Tensor* t : {&r.offsets0, &r.residuals0, &r.offsets1, &r.residuals1}) {
    for (std::int64_t i = 0; i < t->numel(); ++i) REQUIRE(t->data()[i] == 0.0f);
  }
  // Zero offsets and residuals make the refinement an identity.
  Tensor refined = apply_refinement(f0, r.offsets0, r.residuals0);
  for (std::int64_t i = 0; i < refined.numel(); ++i) {
    REQUIRE(refined.data()[i] == doctest::Approx(f0.data()[i]).epsilon(1e-6));
  }

  BMEHead bme(5, mr.widths[0]);
  zero_params(bme.named_parameters());
  Tensor mask = bme_forward(bme, w0, w1, r.features);
  REQUIRE(mask.shape() == std::vector<std::int64_t>({1, 16, 16}));
  for (std::int64_t i = 0; i < mask.numel(); ++i) REQUIRE(mask.data()[i] == 0.5f);

  // M = 0.5 at t = 0.5 blends the two warps into their mean.
  Tensor blended = synthesize_frame(w0, w1, Tensor::zeros({2, 16, 16}), Tensor::zeros({2, 16, 16}),
                                    mask, 0.5f);
  for (std::int64_t i = 0; i < blended.numel(); ++i) {
    REQUIRE(blended.data()[i] ==
            doctest::Approx(0.5f * (w0.data()[i] + w1.data()[i])).epsilon(1e-6));
  }
}

TEST_CASE("refinement network: shape preservation and mask range") {
  GridNet2DMR mr(12);
  const std::int64_t hw = 48;
  Tensor i0 = rand_f({3, hw, hw}, 20, 0.0f, 1.0f);
  Tensor i1 = rand_f({3, hw, hw}, 21, 0.0f, 1.0f);
  Tensor w0 = rand_f({3, hw, hw}, 22, 0.0f, 1.0f);
  Tensor w1 = rand_f({3, hw, hw}, 23, 0.0f, 1.0f);
  Tensor f0 = rand_f({2, hw, hw}, 24, -2.0f, 2.0f);
  Tensor f1 = rand_f({2, hw, hw}, 25, -2.0f, 2.0f);
  MRResult r = mr_forward(mr, i0, i1, w0, w1, f0, f1);
  REQUIRE(r.offsets0.shape() == std::vector<std::int64_t>({2, hw, hw}));
  REQUIRE(r.residuals1.shape() == std::vector<std::int64_t>({2, hw, hw}));
  REQUIRE(r.features.shape() == std::vector<std::int64_t>({mr.widths[0], hw, hw}));

  BMEHead bme(13, mr.widths[0]);
  Tensor mask = bme_forward(bme, w0, w1, r.features);
  float lo = 1.0f, hi = 0.0f;
  for (std::int64_t i = 0; i < mask.numel(); ++i) {
    lo = std::min(lo, mask.data()[i]);
    hi = std::max(hi, mask.data()[i]);
  }
  CHECK(lo > 0.0f);
  CHECK(hi < 1.0f);

  CHECK_THROWS_AS(mr_forward(mr, i0, i1, w0, w1, f0, rand_f({2, hw, hw + 4}, 1, 0, 1)),
                  DimensionError);
  CHECK_THROWS_AS(bme_forward(bme, w0, w1, rand_f({16, hw, hw}, 1, 0, 1)), DimensionError);
}

TEST_CASE("parameter counts: closed forms and documented totals") {
  std::mt19937 rng(1);
  Conv2d probe;
  probe.w = rand_f({8, 3, 3, 3}, 2, -1.0f, 1.0f);
  probe.b = Tensor::zeros({8});
  CHECK(param_count(probe) == 224);  // 3*8*9 + 8

  GridNet3D nme(1);
  GridNet2DMR mr(2);
  BMEHead bme(3, mr.widths[0]);
  CHECK(param_count(nme) == 1975380);
  CHECK(param_count(mr) == 1880776);
  CHECK(param_count(bme) == 15745);
  CHECK(param_count(nme) < 5000000);
  CHECK(param_count(mr) < 5000000);
  CHECK(param_count(nme) + param_count(mr) + param_count(bme) < 5000000);
}

TEST_CASE("weight initialization is seeded and deterministic") {
  GridNet3D a(42), b(42), c(43);
  auto pa = a.named_parameters(), pb = b.named_parameters(), pc = c.named_parameters();
  REQUIRE(pa.size() == pb.size());
  bool all_same = true, any_diff_seed = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].first == pb[i].first);
    for (std::int64_t j = 0; j < pa[i].second.numel(); ++j) {
      if (pa[i].second.data()[j] != pb[i].second.data()[j]) all_same = false;
      if (pa[i].second.data()[j] != pc[i].second.data()[j]) any_diff_seed = true;
    }
  }
  CHECK(all_same);
  CHECK(any_diff_seed);
}

TEST_CASE("every parameter is reachable by gradients (no dead subgraphs)") {
  GridNet3D nme(21);
  {
    Tape tape;
    Tensor x = rand_f({1, 6, 3, 8, 8}, 30, -1.0f, 1.0f);
    MotionCoeffs c = gridnet3d_forward(nme, x);
    Tensor loss = add(add(project_loss(c.alpha0, 31), project_loss(c.beta0, 32)),
                      add(project_loss(c.alpha1, 33), project_loss(c.beta1, 34)));
    tape.backward(loss);
  }
  for (const auto& [name, t] : nme.named_parameters()) {
    CAPTURE(name);
    REQUIRE(t.grad_data() != nullptr);
    CHECK(any_nonzero(t.grad()));
  }

  GridNet2DMR mr(22);
  BMEHead bme(23, mr.widths[0]);
  {
    Tape tape;
    Tensor i0 = rand_f({3, 8, 8}, 40, 0.0f, 1.0f);
    Tensor i1 = rand_f({3, 8, 8}, 41, 0.0f, 1.0f);
    Tensor w0 = rand_f({3, 8, 8}, 42, 0.0f, 1.0f);
    Tensor w1 = rand_f({3, 8, 8}, 43, 0.0f, 1.0f);
    Tensor f0 = rand_f({2, 8, 8}, 44, -1.0f, 1.0f);
    Tensor f1 = rand_f({2, 8, 8}, 45, -1.0f, 1.0f);
    MRResult r = mr_forward(mr, i0, i1, w0, w1, f0, f1);
    Tensor mask = bme_forward(bme, w0, w1, r.features);
    Tensor loss = add(add(project_loss(r.offsets0, 50), project_loss(r.residuals0, 51)),
                      add(add(project_loss(r.offsets1, 52), project_loss(r.residuals1, 53)),
                          project_loss(mask, 54)));
    tape.backward(loss);
  }
  for (const auto& [name, t] : mr.named_parameters()) {
    CAPTURE(name);
    REQUIRE(t.grad_data() != nullptr);
    CHECK(any_nonzero(t.grad()));
  }
  for (const auto& [name, t] : bme.named_parameters()) {
    CAPTURE(name);
    REQUIRE(t.grad_data() != nullptr);
    CHECK(any_nonzero(t.grad()));
  }
}

TEST_CASE("packed synthetic quads drive the estimator end to end") {
  SceneSpec spec;
  spec.width = spec.height = 32;
  spec.background_seed = 8;
  ObjectSpec o;
  o.shape = ObjectShape::Disk;
  o.half_w = o.half_h = 5.0f;
  o.texture_seed = 77;
  o.x0 = o.y0 = 16.0f;
  o.vx = 1.0f;
  o.ay = 0.3f;
  spec.objects.push_back(o);
  Quad q = make_quad(spec, 0.5f);

  Tensor packed = nme_pack_input({q.flow_fwd[0], q.flow_fwd[1], q.flow_fwd[2]},
                                 {q.flow_bwd[0], q.flow_bwd[1], q.flow_bwd[2]},
                                 {q.occ_fwd[0], q.occ_fwd[1], q.occ_fwd[2]},
                                 {q.occ_bwd[0], q.occ_bwd[1], q.occ_bwd[2]});
  REQUIRE(packed.shape() == std::vector<std::int64_t>({1, 6, 3, 32, 32}));
  GridNet3D net(55);
  MotionCoeffs c = gridnet3d_forward(net, packed);
  Tensor flow = eval_quadratic_flow(c, 0.5f, 0);
  REQUIRE(flow.shape() == std::vector<std::int64_t>({2, 32, 32}));
  for (std::int64_t i = 0; i < flow.numel(); ++i) REQUIRE(std::isfinite(flow.data()[i]));
}
