#pragma once

#include <span>
#include <vector>

#include "htwin/autodiff.hpp"

namespace htwin::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update using each parameter's grad field.
/// Non-finite gradients raise NumericError before anything is modified.
void adam_step(AdamState& state, std::span<Tensor2D* const> params);

double global_grad_norm(std::span<Tensor2D* const> params);

/// Rescales all gradients by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_gradients(std::span<Tensor2D* const> params, double max_norm);

void zero_grads(std::span<Tensor2D* const> params);

}  // namespace htwin::nn
