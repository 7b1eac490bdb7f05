// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "fds/geometry.hpp"
#include "fds/image.hpp"
#include "fds/rng.hpp"

namespace fds {

/// How ξ is chosen for each sampled view.
struct SamplerConfig {
  double sigma = 23.0;                 // target mean flow magnitude, pixels
  std::optional<double> fixed_xi;      // set: always use this ξ ∈ [0, 1)
  std::uint64_t rng_seed = 0;

  bool is_fixed() const { return fixed_xi.has_value(); }
  void validate() const;
};

/// Mean depths below this are treated as a collapsed scene.
inline constexpr double kMinMeanDepth = 1e-3;

/// ε_t = σ · D̄ / f with f = (f_x + f_y) / 2. D̄ below kMinMeanDepth is
/// clamped up to it. Throws NonPositiveDepth when mean_depth <= 0.
double adaptive_radius(double mean_depth, const Camera& cam, double sigma);

/// t = (ε sin 2πξ, ε cos 2πξ, 0).
Vec3 sample_translation(double eps_t, double xi);

/// Camera whose pose differs from `input` by the camera-frame translation t:
/// points move p_s = p_i + t, so relative_transform(input, sampled) is the
/// pure translation t.
Camera translate_camera(const Camera& input, const Vec3& t);

struct SampledView {
  Camera camera;
  Vec3 translation = Vec3::Zero();
  double eps_t = 0.0;
  double xi = 0.0;
};

/// Draws one unobserved view near `input`. In random mode ξ comes from `rng`;
/// in fixed mode it is the configured ξ₀ and `rng` is not advanced.
SampledView sample_view(const Camera& input, double mean_depth, const SamplerConfig& cfg,
                        Philox& rng);

/// Mean rendered depth over pixels whose accumulated alpha exceeds 1e-4.
/// Returns 0 when no pixel qualifies.
double masked_mean_depth(const Image& depth, const Image& alpha_acc);

}  // namespace fds
