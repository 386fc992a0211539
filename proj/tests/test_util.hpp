#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "htwin/autodiff.hpp"
#include "htwin/fem.hpp"

namespace test {

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("htwin_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline double max_abs_diff(const htwin::SimulationSeries& a, const htwin::SimulationSeries& b) {
  double d = 0.0;
  for (int f = 0; f < a.num_frames(); ++f) {
    for (int v = 0; v < a.num_nodes(); ++v) d = std::max(d, std::abs(a.frames[f][v] - b.frames[f][v]));
  }
  return d;
}

/// Worst relative mismatch between backward() and central differences (step 1e-5)
/// over every entry of the listed tensors, visiting every `stride`-th entry.
inline double worst_fd_error(const std::vector<htwin::nn::Tensor2D*>& params,
                             const std::function<htwin::nn::Var(htwin::nn::Tape&)>& build,
                             int stride = 1) {
  for (htwin::nn::Tensor2D* p : params) p->zero_grad();
  {
    htwin::nn::Tape tape;
    tape.backward(build(tape));
  }
  auto loss = [&] {
    htwin::nn::Tape tape(false);
    return build(tape).value()(0, 0);
  };
  const double h = 1e-5;
  double worst = 0.0;
  for (htwin::nn::Tensor2D* p : params) {
    for (Eigen::Index k = 0; k < p->value.size(); k += stride) {
      const double old = p->value.data()[k];
      p->value.data()[k] = old + h;
      const double up = loss();
      p->value.data()[k] = old - h;
      const double down = loss();
      p->value.data()[k] = old;
      const double fd = (up - down) / (2.0 * h);
      const double an = p->grad.data()[k];
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
    }
  }
  return worst;
}

}  // namespace test
