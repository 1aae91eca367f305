#include "vfikit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vfikit {

std::string GradCheckReport::describe() const {
  std::ostringstream os;
  os << "max rel error " << max_rel_error << " at input " << worst_input << " element "
     << worst_element << " (analytic " << analytic << ", numeric " << numeric << ")";
  return os.str();
}

GradCheckReport gradcheck(const std::function<TensorD(const std::vector<TensorD>&)>& fn,
                          std::vector<TensorD> inputs, double eps, double atol) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  std::vector<TensorD> analytic;
  {
    TapeD tape;
    TensorD loss = fn(inputs);
    tape.backward(loss);
  }
  for (auto& in : inputs) analytic.push_back(in.grad());

  // Finite differences run untaped and with grads disabled so fn sees plain
  // value tensors.
  for (auto& in : inputs) in.set_requires_grad(false);
  auto eval = [&]() { return fn(inputs).item(); };

  GradCheckReport rep;
  for (std::size_t ii = 0; ii < inputs.size(); ++ii) {
    TensorD& in = inputs[ii];
    const std::int64_t n = in.numel();
    for (std::int64_t e = 0; e < n; ++e) {
      const double saved = in[e];
      in[e] = saved + eps;
      const double fp = eval();
      in[e] = saved - eps;
      const double fm = eval();
      in[e] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[ii][e];
      if (std::abs(a) < atol && std::abs(numeric) < atol) continue;
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst_input = ii;
        rep.worst_element = e;
        rep.analytic = a;
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace vfikit
