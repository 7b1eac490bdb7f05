// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "fds/flow.hpp"
#include "fds/image.hpp"

namespace fds {

struct PhotometricLoss {
  double total = 0.0;  // (1 − λ) L₁ + λ D-SSIM
  double l1 = 0.0;     // mean absolute error
  double dssim = 0.0;  // (1 − SSIM) / 2
  Image grad_color;    // ∂total/∂render
};

/// (1 − λ)·L₁ + λ·(1 − SSIM)/2 between a rendered image and its ground truth.
PhotometricLoss photometric_loss(const Image& render, const Image& gt, double lambda_dssim);

struct FlowDistillationLoss {
  double loss = 0.0;
  std::vector<double> grad_du;  // ∂loss/∂radiance.du
  std::vector<double> grad_dv;
  std::size_t valid_pixels = 0;
  bool no_valid_pixels = false;
};

/// Mean over jointly valid pixels of ‖prior − radiance‖₂. The prior is a
/// constant: gradients are only produced for the radiance flow, and a
/// residual shorter than 1e-8 contributes a zero subgradient. With no jointly
/// valid pixel the loss is zero and `no_valid_pixels` is set.
FlowDistillationLoss fds_loss(const FlowField& prior, const FlowField& radiance);

}  // namespace fds
