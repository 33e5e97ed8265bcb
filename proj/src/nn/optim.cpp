#include "cmr/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmr::nn {

OptimizerState OptimizerState::for_params(const ParameterSet& params, Real peak_lr, Real warmup_fraction,
                                          std::size_t total_steps) {
  OptimizerState s;
  s.peak_lr = peak_lr;
  s.warmup_fraction = warmup_fraction;
  s.total_steps = total_steps;
  for (const auto& [name, t] : params.entries()) {
    s.first_moment.emplace_back(t.numel(), Real(0));
    s.second_moment.emplace_back(t.numel(), Real(0));
  }
  return s;
}

Real lr_schedule(std::size_t step, const OptimizerState& state) {
  if (state.total_steps == 0) return 0;
  const double total = double(state.total_steps);
  const double warm = std::floor(double(state.warmup_fraction) * total);
  const double s = std::min(double(step), total);
  if (warm > 0 && s < warm) return Real(double(state.peak_lr) * s / warm);
  if (total <= warm) return state.peak_lr;
  return Real(double(state.peak_lr) * (total - s) / (total - warm));
}

void adam_step(const ParameterSet& params, OptimizerState& state, Real lr) {
  const auto& entries = params.entries();
  if (state.first_moment.size() != entries.size()) throw std::invalid_argument("optimizer state does not match parameters");
  for (std::size_t p = 0; p < entries.size(); ++p) {
    const Tensor& t = entries[p].second;
    if (state.first_moment[p].size() != t.numel()) {
      throw std::invalid_argument("optimizer moment shape mismatch for " + entries[p].first);
    }
    for (Real g : t.grad()) {
      if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient in " + entries[p].first + "; step aborted");
    }
  }

  ++state.step;
  const auto& h = state.hyper;
  const Real bc1 = Real(1) - std::pow(h.beta1, Real(state.step));
  const Real bc2 = Real(1) - std::pow(h.beta2, Real(state.step));
  for (std::size_t p = 0; p < entries.size(); ++p) {
    Tensor t = entries[p].second;
    auto values = t.values();
    auto grad = t.grad();
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = h.beta1 * m[i] + (Real(1) - h.beta1) * grad[i];
      v[i] = h.beta2 * v[i] + (Real(1) - h.beta2) * grad[i] * grad[i];
      const Real mhat = m[i] / bc1;
      const Real vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + h.eps);
    }
  }
}

}  // namespace cmr::nn
