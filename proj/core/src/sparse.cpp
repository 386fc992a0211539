#include "htwin/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "htwin/errors.hpp"

namespace htwin {

CsrMatrix CsrMatrix::from_mesh(const Mesh& mesh) {
  const int n = mesh.num_nodes();
  std::vector<std::vector<int>> rows(n);
  for (int i = 0; i < n; ++i) rows[i].push_back(i);
  for (const DirectedEdge& e : mesh_to_edges(mesh)) rows[e.i].push_back(e.j);

  CsrMatrix m;
  m.row_start_.assign(1, 0);
  for (auto& r : rows) {
    std::sort(r.begin(), r.end());
    m.cols_.insert(m.cols_.end(), r.begin(), r.end());
    m.row_start_.push_back(static_cast<int>(m.cols_.size()));
  }
  m.values_.assign(m.cols_.size(), 0.0);
  return m;
}

int CsrMatrix::find(int i, int j) const {
  const auto begin = cols_.begin() + row_start_[i];
  const auto end = cols_.begin() + row_start_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<int>(it - cols_.begin());
}

void CsrMatrix::add(int i, int j, double v) {
  const int k = find(i, j);
  if (k < 0) throw UsageError("CsrMatrix::add: entry outside the sparsity pattern");
  values_[k] += v;
}

double CsrMatrix::at(int i, int j) const {
  const int k = find(i, j);
  return k < 0 ? 0.0 : values_[k];
}

void CsrMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = row_start_[i]; k < row_start_[i + 1]; ++k) acc += values_[k] * x[cols_[k]];
    y[i] = acc;
  }
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(size());
  for (int i = 0; i < size(); ++i) d[i] = at(i, i);
  return d;
}

void CsrMatrix::axpby(double a, double b, const CsrMatrix& other) {
  if (other.cols_ != cols_) throw UsageError("CsrMatrix::axpby: pattern mismatch");
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] = a * values_[k] + b * other.values_[k];
}

CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            double relative_tolerance, int max_iterations) {
  const int n = a.size();
  std::vector<double> inv_diag = a.diagonal();
  for (double& d : inv_diag) {
    if (!(d > 0.0)) throw SolverError("conjugate gradient: non-positive diagonal entry");
    d = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), q(n);
  a.multiply(x, r);
  double b_norm = 0.0;
  for (int i = 0; i < n; ++i) {
    r[i] = b[i] - r[i];
    b_norm += b[i] * b[i];
  }
  b_norm = std::sqrt(b_norm);
  if (b_norm == 0.0) b_norm = 1.0;

  auto dot = [n](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
  };

  CgResult result;
  double r_norm = std::sqrt(dot(r, r));
  result.relative_residual = r_norm / b_norm;
  if (result.relative_residual <= relative_tolerance) {
    result.converged = true;
    return result;
  }
  for (int i = 0; i < n; ++i) {
    z[i] = inv_diag[i] * r[i];
    p[i] = z[i];
  }
  double rz = dot(r, z);
  for (int it = 1; it <= max_iterations; ++it) {
    a.multiply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw SolverError("conjugate gradient: matrix is not positive definite");
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    r_norm = std::sqrt(dot(r, r));
    result.iterations = it;
    result.relative_residual = r_norm / b_norm;
    if (result.relative_residual <= relative_tolerance) {
      result.converged = true;
      return result;
    }
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return result;
}

}  // namespace htwin
