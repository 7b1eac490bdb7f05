// SPDX-License-Identifier: Apache-2.0
#include "fds/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "fds/common.hpp"

namespace fds {

double LearningRates::position_at(int iter, int total_iters) const {
  if (total_iters <= 1) return position_init;
  const double s = std::clamp(static_cast<double>(iter) / (total_iters - 1), 0.0, 1.0);
  return std::exp((1.0 - s) * std::log(position_init) + s * std::log(position_final));
}

double LearningRates::for_class(ParamClass c, int iter, int total_iters) const {
  switch (c) {
    case ParamClass::Position: return position_at(iter, total_iters);
    case ParamClass::Scale: return scale;
    case ParamClass::Rotation: return rotation;
    case ParamClass::Opacity: return opacity;
    case ParamClass::Color: return color;
  }
  return 0.0;
}

void LearningRates::validate() const {
  for (double v : {position_init, position_final, scale, rotation, opacity, color})
    if (!(v >= 0.0) || !std::isfinite(v))
      fail(ErrorCode::InvalidArgument, "learning rates must be finite and non-negative");
  if ((position_init > 0.0) != (position_final > 0.0))
    fail(ErrorCode::InvalidArgument, "position learning rates must both be zero or both positive");
}

Adam::Adam(std::size_t n_gaussians, LearningRates lr)
    : lr_(lr), m_(n_gaussians * kParamsPerGaussian, 0.0), v_(n_gaussians * kParamsPerGaussian, 0.0) {}

void Adam::step(GaussianCloud& cloud, int iter, int total_iters) {
  if (cloud.size() * kParamsPerGaussian != m_.size())
    fail(ErrorCode::StateMismatch, "optimizer state does not match the cloud size");
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, t_);
  const double bc2 = 1.0 - std::pow(kBeta2, t_);
  std::array<double, kParamsPerGaussian> rate{};
  for (int k = 0; k < kParamsPerGaussian; ++k)
    rate[k] = lr_.for_class(param_class(k), iter, total_iters);

  auto points = cloud.points();
  const auto grads = cloud.grads();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < kParamsPerGaussian; ++k) {
      const std::size_t idx = i * kParamsPerGaussian + k;
      const double g = param(grads[i], k);
      m_[idx] = kBeta1 * m_[idx] + (1.0 - kBeta1) * g;
      v_[idx] = kBeta2 * v_[idx] + (1.0 - kBeta2) * g * g;
      const double mhat = m_[idx] / bc1;
      const double vhat = v_[idx] / bc2;
      param(points[i], k) -= rate[k] * mhat / (std::sqrt(vhat) + kEpsilon);
    }
  }
}

}  // namespace fds
