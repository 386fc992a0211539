#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace htwin::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major tensor with an optional gradient accumulator of the same shape.
struct Tensor2D {
  Matrix value;
  Matrix grad;

  Tensor2D() = default;
  Tensor2D(int rows, int cols) : value(Matrix::Zero(rows, cols)) {}
  explicit Tensor2D(Matrix v) : value(std::move(v)) {}

  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  bool has_grad() const { return grad.size() != 0; }
  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Records a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so reverse creation order is a
/// valid topological order for the backward sweep. Parameter leaves add
/// their gradient into the referenced Tensor2D::grad, so repeated backward
/// passes accumulate until the caller zeroes the parameters.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var parameter(Tensor2D& param);

  /// loss must be 1x1.
  void backward(Var loss);

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Gradient accumulator of a node, allocated as zeros on first use.
  Matrix& grad(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() != 0; }

  /// grad(id) += expr, assigning directly when the accumulator is still empty.
  template <typename Expr>
  void accumulate(int id, const Expr& expr) {
    Matrix& g = nodes_[id].grad;
    if (g.size() == 0) {
      g.noalias() = expr;
    } else {
      g.noalias() += expr;
    }
  }

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var push(Matrix value, bool requires_grad, BackwardFn fn);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
    Tensor2D* param = nullptr;
  };

  std::vector<Node> nodes_;
  bool record_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }

// Differentiable operations. Shapes are checked; mismatches raise ShapeError.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// x (n x c) plus a 1 x c row broadcast over rows.
Var add_row(Var x, Var row);
/// x W + b with W (in x out) and b (1 x out).
Var affine(Var x, Var weight, Var bias);
Var relu(Var x);
Var scale(Var x, double s);
Var square(Var x);
Var sum(Var x);
/// Row-wise normalization followed by gamma * xhat + beta (both 1 x c).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var concat_cols(std::span<const Var> parts);
/// out.row(r) = x.row(index[r]).
Var gather_rows(Var x, std::span<const int> index);
/// base + a[index_a] + b[index_b], row-gathered.
Var add_gathered(Var base, Var a, std::span<const int> index_a, Var b,
                 std::span<const int> index_b);
/// out.row(d) = mean of x.row(r) over r with dest[r] == d; empty rows are zero.
Var scatter_mean(Var x, std::span<const int> dest, int n_out);
/// Rows [start, start + count) of x.
Var slice_rows(Var x, int start, int count);
/// mean((pred - target)^2) over all entries.
Var mse_loss(Var pred, const Matrix& target);

}  // namespace htwin::nn
