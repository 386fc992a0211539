#pragma once

#include <vector>

#include "htwin/autodiff.hpp"
#include "htwin/rng.hpp"

namespace htwin::nn {

enum class Activation { ReLU, Identity };

struct Linear {
  Tensor2D weight;  // in x out
  Tensor2D bias;    // 1 x out
};

struct LayerNormParams {
  Tensor2D gamma;  // 1 x out
  Tensor2D beta;   // 1 x out
};

/// Fully connected network: affine maps separated by the activation, with an
/// optional layer normalization after the final affine map.
struct MlpParams {
  std::vector<Linear> layers;
  Activation activation = Activation::ReLU;
  bool output_norm = false;
  LayerNormParams norm;

  int input_dim() const { return layers.front().weight.rows(); }
  int output_dim() const { return layers.back().weight.cols(); }

  /// Throws ShapeError on broken chaining, NumericError on non-finite values.
  void validate() const;

  /// Fixed enumeration order: per layer weight then bias, then gamma, beta.
  std::vector<Tensor2D*> parameters();
  std::vector<const Tensor2D*> parameters() const;
};

/// dims = {in, hidden..., out}. Glorot-uniform weights, zero biases, unit gamma.
MlpParams make_mlp(const std::vector<int>& dims, Activation activation, bool output_norm,
                   Rng& rng);

Var mlp_forward(Tape& tape, MlpParams& mlp, Var input);

/// Continues an MLP whose first-layer product x W0 was computed elsewhere
/// (e.g. block-wise over concatenated inputs); adds the first bias and runs the rest.
Var mlp_forward_from_product(Tape& tape, MlpParams& mlp, Var first_product);

/// Same function as mlp_forward, recorded op by op (affine, relu, layer_norm).
Var mlp_forward_composed(Tape& tape, MlpParams& mlp, Var input);

}  // namespace htwin::nn
