#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vfikit/tensor.hpp"

namespace vfikit {

struct GradCheckReport {
  double max_rel_error = 0.0;
  // Flat element index and input index where the worst error occurred.
  std::size_t worst_input = 0;
  std::int64_t worst_element = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool ok(double tol = 1e-4) const { return max_rel_error < tol; }
  std::string describe() const;
};

// Central-difference check of a scalar-valued function of double tensors.
// fn must be a pure function of the inputs: it is re-evaluated ~2N times.
// Relative error per element is |a - n| / max(|a|, |n|, 1e-8). Elements where
// both gradients fall below atol count as matching zeros: differencing an
// exactly-flat direction measures only rounding noise, which would otherwise
// be amplified by the small denominator.
GradCheckReport gradcheck(const std::function<TensorD(const std::vector<TensorD>&)>& fn,
                          std::vector<TensorD> inputs, double eps = 1e-5, double atol = 1e-6);

}  // namespace vfikit
