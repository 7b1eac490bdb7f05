// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "fds/gaussian_field.hpp"

namespace fds {

/// Per-class step sizes. Position decays exponentially from position_init
/// to position_final over the run.
struct LearningRates {
  double position_init = 1.6e-4;
  double position_final = 1.6e-6;
  double scale = 1e-3;
  double rotation = 1e-3;
  double opacity = 1e-3;
  double color = 1e-3;

  double position_at(int iter, int total_iters) const;
  double for_class(ParamClass c, int iter, int total_iters) const;
  void validate() const;
};

/// Adam with β = (0.9, 0.999), ε = 1e-15 and bias correction.
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-15;

  Adam(std::size_t n_gaussians, LearningRates lr);

  /// Applies one update from cloud.grads(); `iter` is zero-based.
  void step(GaussianCloud& cloud, int iter, int total_iters);
  int steps_taken() const { return t_; }

 private:
  LearningRates lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  int t_ = 0;
};

}  // namespace fds
