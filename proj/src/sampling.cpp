// SPDX-License-Identifier: Apache-2.0
#include "fds/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fds/common.hpp"
#include "fds/gaussian_field.hpp"

namespace fds {

void SamplerConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    fail(ErrorCode::InvalidArgument, "sampler sigma must be positive");
  if (fixed_xi && !(*fixed_xi >= 0.0 && *fixed_xi < 1.0))
    fail(ErrorCode::InvalidArgument, "fixed xi must lie in [0, 1)");
}

double adaptive_radius(double mean_depth, const Camera& cam, double sigma) {
  if (!(mean_depth > 0.0))
    fail(ErrorCode::NonPositiveDepth, "mean depth " + std::to_string(mean_depth));
  return sigma * std::max(mean_depth, kMinMeanDepth) / cam.mean_focal();
}

Vec3 sample_translation(double eps_t, double xi) {
  const double angle = 2.0 * std::numbers::pi * xi;
  return {eps_t * std::sin(angle), eps_t * std::cos(angle), 0.0};
}

Camera translate_camera(const Camera& input, const Vec3& t) {
  Camera out = input;
  out.pose = compose(RigidTransform::from_translation(t), input.pose);
  return out;
}

SampledView sample_view(const Camera& input, double mean_depth, const SamplerConfig& cfg,
                        Philox& rng) {
  SampledView view;
  view.eps_t = adaptive_radius(mean_depth, input, cfg.sigma);
  view.xi = cfg.fixed_xi ? *cfg.fixed_xi : rng.uniform();
  view.translation = sample_translation(view.eps_t, view.xi);
  view.camera = translate_camera(input, view.translation);
  return view;
}

double masked_mean_depth(const Image& depth, const Image& alpha_acc) {
  double sum = 0.0;
  std::size_t count = 0;
  const auto d = depth.data();
  const auto a = alpha_acc.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (a[i] > kAccumulatedAlphaMin) {
      sum += d[i];
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace fds
