#pragma once

#include <cstddef>
#include <vector>

#include "cmr/nn/layers.hpp"

namespace cmr::nn {

struct AdamHyper {
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
};

struct OptimizerState {
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
  std::size_t step = 0;
  Real peak_lr = Real(5e-5);
  Real warmup_fraction = Real(0.1);
  std::size_t total_steps = 0;
  AdamHyper hyper;

  // Zero moments shaped like each parameter.
  static OptimizerState for_params(const ParameterSet& params, Real peak_lr, Real warmup_fraction,
                                   std::size_t total_steps);
};

// Linear warmup 0 -> peak over the first warmup_fraction * total steps, then
// linear decay to 0 at total_steps.
Real lr_schedule(std::size_t step, const OptimizerState& state);

// One bias-corrected Adam update with learning rate lr. Throws (leaving params
// and state untouched) if any gradient is not finite.
void adam_step(const ParameterSet& params, OptimizerState& state, Real lr);

}  // namespace cmr::nn
