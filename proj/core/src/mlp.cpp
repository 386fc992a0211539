#include "htwin/mlp.hpp"

#include <cmath>

#include "htwin/errors.hpp"

namespace htwin::nn {

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("mlp: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Linear& lin = layers[l];
    if (lin.bias.rows() != 1 || lin.bias.cols() != lin.weight.cols()) {
      throw ShapeError("mlp: bias shape does not match layer " + std::to_string(l));
    }
    if (l > 0 && layers[l - 1].weight.cols() != lin.weight.rows()) {
      throw ShapeError("mlp: layer " + std::to_string(l) + " does not chain");
    }
    if (!lin.weight.value.allFinite() || !lin.bias.value.allFinite()) {
      throw NumericError("mlp: non-finite parameter in layer " + std::to_string(l));
    }
  }
  if (output_norm) {
    const int out = output_dim();
    if (norm.gamma.cols() != out || norm.beta.cols() != out) {
      throw ShapeError("mlp: layer-norm width does not match output");
    }
  }
}

std::vector<Tensor2D*> MlpParams::parameters() {
  std::vector<Tensor2D*> out;
  for (Linear& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  if (output_norm) {
    out.push_back(&norm.gamma);
    out.push_back(&norm.beta);
  }
  return out;
}

std::vector<const Tensor2D*> MlpParams::parameters() const {
  std::vector<const Tensor2D*> out;
  for (const Tensor2D* p : const_cast<MlpParams*>(this)->parameters()) out.push_back(p);
  return out;
}

MlpParams make_mlp(const std::vector<int>& dims, Activation activation, bool output_norm,
                   Rng& rng) {
  if (dims.size() < 2) throw ShapeError("make_mlp: need at least input and output dims");
  MlpParams mlp;
  mlp.activation = activation;
  mlp.output_norm = output_norm;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    if (in <= 0 || out <= 0) throw ShapeError("make_mlp: dimensions must be positive");
    Linear lin{Tensor2D(in, out), Tensor2D(1, out)};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (int r = 0; r < in; ++r) {
      for (int c = 0; c < out; ++c) lin.weight.value(r, c) = rng.uniform(-limit, limit);
    }
    mlp.layers.push_back(std::move(lin));
  }
  if (output_norm) {
    const int out = dims.back();
    mlp.norm.gamma = Tensor2D(Matrix::Ones(1, out));
    mlp.norm.beta = Tensor2D(1, out);
  }
  return mlp;
}

namespace {

Var finish(Tape& tape, MlpParams& mlp, Var h, std::size_t next_layer) {
  for (std::size_t l = next_layer; l < mlp.layers.size(); ++l) {
    if (mlp.activation == Activation::ReLU) h = relu(h);
    Linear& lin = mlp.layers[l];
    h = affine(h, tape.parameter(lin.weight), tape.parameter(lin.bias));
  }
  if (mlp.output_norm) {
    h = layer_norm(h, tape.parameter(mlp.norm.gamma), tape.parameter(mlp.norm.beta));
  }
  return h;
}

void check_input(const MlpParams& mlp, Var input) {
  if (mlp.layers.empty()) throw ShapeError("mlp_forward: no layers");
  if (input.cols() != mlp.input_dim()) {
    throw ShapeError("mlp_forward: input has " + std::to_string(input.cols()) +
                     " columns, expected " + std::to_string(mlp.input_dim()));
  }
}

void check_product(const MlpParams& mlp, Var product) {
  if (mlp.layers.empty()) throw ShapeError("mlp_forward: no layers");
  if (product.cols() != mlp.layers.front().weight.cols()) {
    throw ShapeError("mlp_forward_from_product: width mismatch");
  }
}

constexpr double kNormEps = 1e-5;

// Whole MLP as one tape node. Keeps the pre-activations only.
Var fused(Tape& tape, MlpParams& mlp, Var x, bool x_is_product) {
  const std::size_t n_layers = mlp.layers.size();
  std::vector<int> w(n_layers), b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    w[l] = tape.parameter(mlp.layers[l].weight).id();
    b[l] = tape.parameter(mlp.layers[l].bias).id();
  }
  const bool norm = mlp.output_norm;
  const int ig = norm ? tape.parameter(mlp.norm.gamma).id() : -1;
  const int ibeta = norm ? tape.parameter(mlp.norm.beta).id() : -1;
  const bool use_relu = mlp.activation == Activation::ReLU;

  std::vector<Matrix> pre(n_layers);
  if (x_is_product) {
    pre[0] = x.value();
  } else {
    pre[0].noalias() = x.value() * tape.value(w[0]);
  }
  pre[0].rowwise() += tape.value(b[0]).row(0);
  for (std::size_t l = 1; l < n_layers; ++l) {
    if (use_relu) {
      pre[l].noalias() = pre[l - 1].cwiseMax(0.0) * tape.value(w[l]);
    } else {
      pre[l].noalias() = pre[l - 1] * tape.value(w[l]);
    }
    pre[l].rowwise() += tape.value(b[l]).row(0);
  }

  Matrix out = std::move(pre.back());
  pre.pop_back();
  Matrix xhat;
  Eigen::ArrayXd inv_std;
  if (norm) {
    const Eigen::ArrayXd mean = out.rowwise().mean();
    xhat = out.array().colwise() - mean;
    inv_std = (xhat.array().square().rowwise().mean() + kNormEps).rsqrt();
    xhat.array().colwise() *= inv_std;
    out = xhat.array().rowwise() * tape.value(ig).row(0).array();
    out.rowwise() += tape.value(ibeta).row(0);
  }

  const int ix = x.id();
  bool rg = tape.recording() && tape.requires_grad(ix);
  for (std::size_t l = 0; l < n_layers; ++l) rg = rg || tape.requires_grad(w[l]) || tape.requires_grad(b[l]);
  return tape.push(
      std::move(out), rg,
      [ix, x_is_product, use_relu, norm, ig, ibeta, w = std::move(w), b = std::move(b),
       pre = std::move(pre), xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& tp,
                                                                                    int self) {
        const Matrix& g = tp.grad(self);
        Matrix d;
        if (norm) {
          tp.accumulate(ig, (g.array() * xhat.array()).colwise().sum().matrix());
          tp.accumulate(ibeta, g.colwise().sum());
          d = g.array().rowwise() * tp.value(ig).row(0).array();
          const Eigen::ArrayXd m1 = d.rowwise().mean();
          const Eigen::ArrayXd m2 = (d.array() * xhat.array()).rowwise().mean();
          d.array().colwise() -= m1;
          d.array() -= xhat.array().colwise() * m2;
          d.array().colwise() *= inv_std;
        } else {
          d = g;
        }
        Matrix dh;
        for (std::size_t l = pre.size(); l >= 1; --l) {
          const Matrix& a = pre[l - 1];
          tp.accumulate(b[l], d.colwise().sum());
          if (use_relu) {
            tp.accumulate(w[l], a.cwiseMax(0.0).transpose() * d);
            dh.noalias() = d * tp.value(w[l]).transpose();
            d = (a.array() > 0.0).select(dh, 0.0);
          } else {
            tp.accumulate(w[l], a.transpose() * d);
            d.noalias() = d * tp.value(w[l]).transpose();
          }
        }
        tp.accumulate(b[0], d.colwise().sum());
        if (x_is_product) {
          if (tp.requires_grad(ix)) tp.accumulate(ix, d);
          return;
        }
        tp.accumulate(w[0], tp.value(ix).transpose() * d);
        if (tp.requires_grad(ix)) tp.accumulate(ix, d * tp.value(w[0]).transpose());
      });
}

}  // namespace

Var mlp_forward(Tape& tape, MlpParams& mlp, Var input) {
  check_input(mlp, input);
  return fused(tape, mlp, input, false);
}

Var mlp_forward_from_product(Tape& tape, MlpParams& mlp, Var first_product) {
  check_product(mlp, first_product);
  return fused(tape, mlp, first_product, true);
}

Var mlp_forward_composed(Tape& tape, MlpParams& mlp, Var input) {
  check_input(mlp, input);
  Linear& first = mlp.layers.front();
  Var h = affine(input, tape.parameter(first.weight), tape.parameter(first.bias));
  return finish(tape, mlp, h, 1);
}

}  // namespace htwin::nn
