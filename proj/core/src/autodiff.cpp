#include "htwin/autodiff.hpp"

#include <cmath>
#include <sstream>

#include "htwin/errors.hpp"

namespace htwin::nn {
namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream s;
  s << m.rows() << "x" << m.cols();
  return s.str();
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands recorded on different tapes");
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) + " vs " +
                     shape_str(b.value()));
  }
}

bool needs(Tape& t, int id) { return t.recording() && t.requires_grad(id); }

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(Tensor2D& param) {
  Var v = push(param.value, true, nullptr);
  if (record_) nodes_[v.id()].param = &param;
  return v;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw UsageError("backward: loss belongs to another tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw UsageError("backward: loss must be a scalar, got " + shape_str(loss.value()));
  }
  if (!record_) throw UsageError("backward: tape was created without gradient recording");
  grad(loss.id())(0, 0) += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param != nullptr) {
      if (!n.param->has_grad()) n.param->zero_grad();
      n.param->grad += n.grad;
    }
    if (n.backward) n.backward(*this, id);
  }
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a.value()) + " * " + shape_str(b.value()));
  }
  Tape& t = a.tape();
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), needs(t, ia) || needs(t, ib), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a, b);
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() + b.value(), needs(t, ia) || needs(t, ib), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a, b);
  Tape& t = a.tape();
  const int ia = a.id(), ib = b.id();
  return t.push(a.value() - b.value(), needs(t, ia) || needs(t, ib), [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.accumulate(ia, g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, -g);
  });
}

Var add_row(Var x, Var row) {
  require_same_tape(x, row);
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw ShapeError("add_row: " + shape_str(x.value()) + " + " + shape_str(row.value()));
  }
  Tape& t = x.tape();
  Matrix out = x.value();
  out.rowwise() += row.value().row(0);
  const int ix = x.id(), ir = row.id();
  return t.push(std::move(out), needs(t, ix) || needs(t, ir), [ix, ir](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.accumulate(ix, g);
    if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var affine(Var x, Var weight, Var bias) {
  require_same_tape(x, weight);
  require_same_tape(x, bias);
  if (x.cols() != weight.rows() || bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw ShapeError("affine: " + shape_str(x.value()) + " * " + shape_str(weight.value()) +
                     " + " + shape_str(bias.value()));
  }
  Tape& t = x.tape();
  Matrix out(x.rows(), weight.cols());
  out.noalias() = x.value() * weight.value();
  out.rowwise() += bias.value().row(0);
  const int ix = x.id(), iw = weight.id(), ib = bias.id();
  const bool rg = needs(t, ix) || needs(t, iw) || needs(t, ib);
  return t.push(std::move(out), rg, [ix, iw, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.accumulate(ix, g * tp.value(iw).transpose());
    if (tp.requires_grad(iw)) tp.accumulate(iw, tp.value(ix).transpose() * g);
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
  });
}

Var relu(Var x) {
  Tape& t = x.tape();
  const int ix = x.id();
  return t.push(x.value().cwiseMax(0.0), needs(t, ix), [ix](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Matrix& in = tp.value(ix);
    tp.accumulate(ix, (in.array() > 0.0).select(g, 0.0));
  });
}

Var scale(Var x, double s) {
  Tape& t = x.tape();
  const int ix = x.id();
  return t.push(x.value() * s, needs(t, ix), [ix, s](Tape& tp, int self) {
    tp.accumulate(ix, s * tp.grad(self));
  });
}

Var square(Var x) {
  Tape& t = x.tape();
  const int ix = x.id();
  return t.push(x.value().array().square().matrix(), needs(t, ix), [ix](Tape& tp, int self) {
    tp.grad(ix).array() += 2.0 * tp.value(ix).array() * tp.grad(self).array();
  });
}

Var sum(Var x) {
  Tape& t = x.tape();
  const int ix = x.id();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return t.push(std::move(out), needs(t, ix), [ix](Tape& tp, int self) {
    tp.grad(ix).array() += tp.grad(self)(0, 0);
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_same_tape(x, gamma);
  require_same_tape(x, beta);
  const int c = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c) {
    throw ShapeError("layer_norm: gamma/beta must be 1x" + std::to_string(c));
  }
  Tape& t = x.tape();
  const Matrix& in = x.value();
  const Eigen::ArrayXd mean = in.rowwise().mean();
  Matrix xhat = in.array().colwise() - mean;
  const Eigen::ArrayXd inv_std =
      (xhat.array().square().rowwise().mean() + eps).rsqrt();
  xhat.array().colwise() *= inv_std;
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool rg = needs(t, ix) || needs(t, ig) || needs(t, ib);
  return t.push(std::move(out), rg,
                [ix, ig, ib, xhat = std::move(xhat), inv_std](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(ig)) {
                    tp.accumulate(ig, (g.array() * xhat.array()).colwise().sum().matrix());
                  }
                  if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                  if (tp.requires_grad(ix)) {
                    Matrix dxhat = g.array().rowwise() * tp.value(ig).row(0).array();
                    const Eigen::ArrayXd m1 = dxhat.rowwise().mean();
                    const Eigen::ArrayXd m2 = (dxhat.array() * xhat.array()).rowwise().mean();
                    dxhat.array().colwise() -= m1;
                    dxhat.array() -= xhat.array().colwise() * m2;
                    dxhat.array().colwise() *= inv_std;
                    tp.accumulate(ix, dxhat);
                  }
                });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape& t = parts[0].tape();
  const int n = parts[0].rows();
  int total = 0;
  bool rg = false;
  std::vector<int> ids;
  std::vector<int> offsets;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    if (p.rows() != n) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id());
    offsets.push_back(total);
    total += p.cols();
    rg = rg || needs(t, p.id());
  }
  Matrix out(n, total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    out.middleCols(offsets[k], parts[k].cols()) = parts[k].value();
  }
  return t.push(std::move(out), rg, [ids, offsets](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!tp.requires_grad(ids[k])) continue;
      Matrix& gk = tp.grad(ids[k]);
      gk += g.middleCols(offsets[k], gk.cols());
    }
  });
}

Var gather_rows(Var x, std::span<const int> index) {
  Tape& t = x.tape();
  const Matrix& in = x.value();
  Matrix out(static_cast<Eigen::Index>(index.size()), in.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= in.rows()) throw ShapeError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = in.row(index[r]);
  }
  const int ix = x.id();
  std::vector<int> idx(index.begin(), index.end());
  return t.push(std::move(out), needs(t, ix), [ix, idx = std::move(idx)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix& gx = tp.grad(ix);
    for (std::size_t r = 0; r < idx.size(); ++r) gx.row(idx[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var add_gathered(Var base, Var a, std::span<const int> index_a, Var b,
                 std::span<const int> index_b) {
  require_same_tape(base, a);
  require_same_tape(base, b);
  const Eigen::Index rows = base.value().rows();
  if (a.cols() != base.cols() || b.cols() != base.cols() ||
      static_cast<Eigen::Index>(index_a.size()) != rows ||
      static_cast<Eigen::Index>(index_b.size()) != rows) {
    throw ShapeError("add_gathered: shape mismatch");
  }
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  Matrix out = base.value();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int ra = index_a[r], rb = index_b[r];
    if (ra < 0 || ra >= va.rows() || rb < 0 || rb >= vb.rows()) {
      throw ShapeError("add_gathered: index out of range");
    }
    out.row(r) += va.row(ra) + vb.row(rb);
  }
  Tape& t = base.tape();
  const int i0 = base.id(), i1 = a.id(), i2 = b.id();
  const bool rg = needs(t, i0) || needs(t, i1) || needs(t, i2);
  std::vector<int> ja(index_a.begin(), index_a.end());
  std::vector<int> jb(index_b.begin(), index_b.end());
  return t.push(std::move(out), rg,
                [i0, i1, i2, ja = std::move(ja), jb = std::move(jb)](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(i0)) tp.accumulate(i0, g);
                  if (tp.requires_grad(i1)) {
                    Matrix& ga = tp.grad(i1);
                    for (std::size_t r = 0; r < ja.size(); ++r) ga.row(ja[r]) += g.row(r);
                  }
                  if (tp.requires_grad(i2)) {
                    Matrix& gb = tp.grad(i2);
                    for (std::size_t r = 0; r < jb.size(); ++r) gb.row(jb[r]) += g.row(r);
                  }
                });
}

Var scatter_mean(Var x, std::span<const int> dest, int n_out) {
  Tape& t = x.tape();
  const Matrix& in = x.value();
  if (static_cast<Eigen::Index>(dest.size()) != in.rows()) {
    throw ShapeError("scatter_mean: destination count does not match rows");
  }
  Matrix out = Matrix::Zero(n_out, in.cols());
  std::vector<double> inv_count(n_out, 0.0);
  for (std::size_t r = 0; r < dest.size(); ++r) {
    if (dest[r] < 0 || dest[r] >= n_out) throw ShapeError("scatter_mean: index out of range");
    out.row(dest[r]) += in.row(static_cast<Eigen::Index>(r));
    inv_count[dest[r]] += 1.0;
  }
  for (int d = 0; d < n_out; ++d) {
    if (inv_count[d] > 0.0) {
      inv_count[d] = 1.0 / inv_count[d];
      out.row(d) *= inv_count[d];
    }
  }
  const int ix = x.id();
  std::vector<int> idx(dest.begin(), dest.end());
  return t.push(std::move(out), needs(t, ix),
                [ix, idx = std::move(idx), inv_count = std::move(inv_count)](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  Matrix& gx = tp.grad(ix);
                  for (std::size_t r = 0; r < idx.size(); ++r) {
                    gx.row(static_cast<Eigen::Index>(r)) += inv_count[idx[r]] * g.row(idx[r]);
                  }
                });
}

Var slice_rows(Var x, int start, int count) {
  if (start < 0 || count < 0 || start + count > x.rows()) throw ShapeError("slice_rows: out of range");
  Tape& t = x.tape();
  const int ix = x.id();
  return t.push(x.value().middleRows(start, count), needs(t, ix), [ix, start, count](Tape& tp, int self) {
    tp.grad(ix).middleRows(start, count) += tp.grad(self);
  });
}

Var mse_loss(Var pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: prediction " + shape_str(pred.value()) + " vs target " +
                     shape_str(target));
  }
  Tape& t = pred.tape();
  Matrix diff = pred.value() - target;
  const double inv_n = 1.0 / static_cast<double>(diff.size());
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() * inv_n;
  const int ip = pred.id();
  return t.push(std::move(out), needs(t, ip), [ip, diff = std::move(diff), inv_n](Tape& tp, int self) {
    tp.accumulate(ip, (2.0 * inv_n * tp.grad(self)(0, 0)) * diff);
  });
}

}  // namespace htwin::nn
