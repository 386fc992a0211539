#pragma once

#include <span>
#include <vector>

#include "htwin/autodiff.hpp"

namespace htwin::nn {

/// Per-channel minmax normalization to [0, 1] over the fitted range.
/// A channel with max == min maps to 0 and inverts to min.
struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;

  int channels() const { return static_cast<int>(min.size()); }

  double apply(double x, int channel = 0) const;
  double invert(double y, int channel = 0) const;
  /// Columns are channels.
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& y) const;

  /// Widens the range to cover every row of x.
  void observe(const Matrix& x);
  void observe(std::span<const double> values, int channel = 0);

  friend bool operator==(const MinMaxScaler&, const MinMaxScaler&) = default;
};

MinMaxScaler minmax_fit(const Matrix& samples);
MinMaxScaler empty_scaler(int channels);

}  // namespace htwin::nn
