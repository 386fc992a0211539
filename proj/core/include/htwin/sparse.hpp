#pragma once

#include <span>
#include <vector>

#include "htwin/mesh.hpp"

namespace htwin {

/// Compressed sparse row matrix with a fixed sparsity pattern.
class CsrMatrix {
 public:
  CsrMatrix() = default;

  /// Pattern holds the diagonal plus every mesh edge.
  static CsrMatrix from_mesh(const Mesh& mesh);

  int size() const { return static_cast<int>(row_start_.size()) - 1; }
  int nonzeros() const { return static_cast<int>(cols_.size()); }

  /// Adds v at (i, j); the entry must be in the pattern.
  void add(int i, int j, double v);
  double at(int i, int j) const;
  void set_zero();

  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;

  /// this = a * this + b * other (same pattern).
  void axpby(double a, double b, const CsrMatrix& other);

  std::span<const int> row_start() const { return row_start_; }
  std::span<const int> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  int find(int i, int j) const;

  std::vector<int> row_start_{0};
  std::vector<int> cols_;
  std::vector<double> values_;
};

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradient; x holds the initial guess.
CgResult conjugate_gradient(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                            double relative_tolerance, int max_iterations);

}  // namespace htwin
