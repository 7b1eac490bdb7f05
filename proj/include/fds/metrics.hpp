// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fds/image.hpp"

namespace fds {

/// Mean of |pred − gt| / gt over pixels where mask != 0. Throws NoValidPixels.
double abs_rel(const Image& pred_depth, const Image& gt_depth, const Image& valid_mask);

/// PSNR for images in [0, 1]; reported as 99 when MSE < 1e-12.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Image& pred, const Image& gt);

// SSIM with an 11×11 Gaussian window (σ = 1.5), zero padding, C₁ = 0.01²,
// C₂ = 0.03², averaged over pixels and channels.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

double ssim(const Image& a, const Image& b);
/// SSIM and, when `grad_a` is non-null, ∂SSIM/∂a.
double ssim_with_gradient(const Image& a, const Image& b, Image* grad_a);

/// Evaluation mask for depth: gt finite and positive, rendered alpha > 1e-4.
Image depth_eval_mask(const Image& gt_depth, const Image& alpha_acc);

struct ViewMetrics {
  int view_id = -1;
  double abs_rel = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::size_t depth_pixels = 0;
};

struct EvalReport {
  std::string split;
  std::vector<ViewMetrics> views;
  double mean_abs_rel = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::size_t depth_pixels = 0;

  void finalize();
  std::string to_csv() const;
  std::string to_json() const;
};

}  // namespace fds
