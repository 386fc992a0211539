#include "htwin/scaler.hpp"

#include <algorithm>
#include <limits>

#include "htwin/errors.hpp"

namespace htwin::nn {

double MinMaxScaler::apply(double x, int channel) const {
  const double lo = min.at(channel);
  const double range = max.at(channel) - lo;
  return range > 0.0 ? (x - lo) / range : 0.0;
}

double MinMaxScaler::invert(double y, int channel) const {
  const double lo = min.at(channel);
  const double range = max.at(channel) - lo;
  return range > 0.0 ? lo + y * range : lo;
}

Matrix MinMaxScaler::apply(const Matrix& x) const {
  if (x.cols() != channels()) throw ShapeError("MinMaxScaler::apply: channel count mismatch");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double lo = min[c];
    const double range = max[c] - lo;
    if (range > 0.0) {
      out.col(c) = (x.col(c).array() - lo) / range;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

Matrix MinMaxScaler::invert(const Matrix& y) const {
  if (y.cols() != channels()) throw ShapeError("MinMaxScaler::invert: channel count mismatch");
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double lo = min[c];
    const double range = max[c] - lo;
    if (range > 0.0) {
      out.col(c) = (lo + y.col(c).array() * range).matrix();
    } else {
      out.col(c).setConstant(lo);
    }
  }
  return out;
}

void MinMaxScaler::observe(const Matrix& x) {
  if (x.cols() != channels()) throw ShapeError("MinMaxScaler::observe: channel count mismatch");
  if (x.rows() == 0) return;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    min[c] = std::min(min[c], x.col(c).minCoeff());
    max[c] = std::max(max[c], x.col(c).maxCoeff());
  }
}

void MinMaxScaler::observe(std::span<const double> values, int channel) {
  for (double v : values) {
    min.at(channel) = std::min(min[channel], v);
    max.at(channel) = std::max(max[channel], v);
  }
}

MinMaxScaler empty_scaler(int channels) {
  MinMaxScaler s;
  s.min.assign(channels, std::numeric_limits<double>::infinity());
  s.max.assign(channels, -std::numeric_limits<double>::infinity());
  return s;
}

MinMaxScaler minmax_fit(const Matrix& samples) {
  if (samples.rows() == 0) throw DataError("minmax_fit: no samples");
  MinMaxScaler s = empty_scaler(static_cast<int>(samples.cols()));
  s.observe(samples);
  return s;
}

}  // namespace htwin::nn
