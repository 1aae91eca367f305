#pragma once

#include <cstdint>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

struct AdamConfig {
  float lr = 2e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// First/second moment buffers parallel to the parameter list, plus the shared
// step counter used for bias correction. Serialized into checkpoints.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;
};

AdamState adam_init(const std::vector<Tensor>& params);

// One bias-corrected update from the gradients currently accumulated on the
// parameters. Parameters without an accumulated gradient are treated as
// having zero gradient. Does not clear gradients; the caller owns that.
void adam_step(AdamState& state, std::vector<Tensor>& params, const AdamConfig& cfg);

}  // namespace vfikit
