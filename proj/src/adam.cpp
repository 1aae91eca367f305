#include "vfikit/adam.hpp"

#include <cmath>

namespace vfikit {

AdamState adam_init(const std::vector<Tensor>& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.push_back(Tensor::zeros(p.shape()));
    s.v.push_back(Tensor::zeros(p.shape()));
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Tensor>& params, const AdamConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: state built for a different parameter list");
  }
  state.step += 1;
  const float c1 = 1.0f - std::pow(cfg.beta1, static_cast<float>(state.step));
  const float c2 = 1.0f - std::pow(cfg.beta2, static_cast<float>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    if (m.shape() != p.shape()) throw ContractError("adam_step: parameter shape changed");
    const std::int64_t n = p.numel();
    const float* g = p.grad_data();
    float* pd = p.data();
    float* md = m.data();
    float* vd = v.data();
    for (std::int64_t e = 0; e < n; ++e) {
      const float ge = g ? g[e] : 0.0f;
      md[e] = cfg.beta1 * md[e] + (1.0f - cfg.beta1) * ge;
      vd[e] = cfg.beta2 * vd[e] + (1.0f - cfg.beta2) * ge * ge;
      const float mhat = md[e] / c1;
      const float vhat = vd[e] / c2;
      pd[e] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace vfikit
