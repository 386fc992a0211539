#include "htwin/optim.hpp"

#include <cmath>

#include "htwin/errors.hpp"

namespace htwin::nn {

void adam_step(AdamState& state, std::span<Tensor2D* const> params) {
  if (state.m.empty()) {
    for (const Tensor2D* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: parameter count changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor2D& p = *params[k];
    if (state.m[k].rows() != p.rows() || state.m[k].cols() != p.cols()) {
      throw ShapeError("adam_step: moment shape mismatch for parameter " + std::to_string(k));
    }
    if (p.has_grad() && !p.grad.allFinite()) {
      throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(k) +
                         " at step " + std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor2D& p = *params[k];
    if (!p.has_grad()) continue;
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * p.grad;
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.lr * (state.m[k].array() / bc1) /
                       ((state.v[k].array() / bc2).sqrt() + state.eps);
  }
}

double global_grad_norm(std::span<Tensor2D* const> params) {
  double sq = 0.0;
  for (const Tensor2D* p : params) {
    if (p->has_grad()) sq += p->grad.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_gradients(std::span<Tensor2D* const> params, double max_norm) {
  if (!(max_norm > 0.0)) throw ParameterError("clip_gradients: max_norm must be positive");
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor2D* p : params) {
      if (p->has_grad()) p->grad *= s;
    }
  }
  return norm;
}

void zero_grads(std::span<Tensor2D* const> params) {
  for (Tensor2D* p : params) p->zero_grad();
}

}  // namespace htwin::nn
