#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

// Serialized training state. The on-disk format is explicit little-endian
// binary: "VFCK" magic, u32 version, i64 step, a length-prefixed config
// snapshot (JSON text), the named parameter tensors (name, shape, float32
// payload), and optionally the Adam moment buffers parallel to the
// parameters. Loading what save wrote reproduces every tensor bit-exactly.
struct Checkpoint {
  std::uint32_t version = 1;
  std::int64_t step = 0;
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> params;
  bool has_opt = false;
  std::int64_t opt_step = 0;
  std::vector<Tensor> opt_m, opt_v;  // parallel to params when has_opt
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vfikit
