// SPDX-License-Identifier: Apache-2.0
#include "fds/losses.hpp"

#include <cmath>

#include "fds/common.hpp"
#include "fds/metrics.hpp"

namespace fds {

PhotometricLoss photometric_loss(const Image& render, const Image& gt, double lambda_dssim) {
  if (!render.same_shape(gt) || render.empty())
    fail(ErrorCode::ShapeMismatch, "render and ground truth differ in shape");
  PhotometricLoss out;
  const auto r = render.data();
  const auto g = gt.data();
  const double inv_n = 1.0 / static_cast<double>(r.size());

  Image grad_ssim;
  const double s = ssim_with_gradient(render, gt, lambda_dssim > 0.0 ? &grad_ssim : nullptr);
  out.dssim = 0.5 * (1.0 - s);

  out.grad_color = Image(render.width(), render.height(), render.channels());
  auto grad = out.grad_color.data();
  double l1 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - g[i];
    l1 += std::abs(d);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    grad[i] = (1.0 - lambda_dssim) * sign * inv_n;
    if (lambda_dssim > 0.0) grad[i] -= lambda_dssim * 0.5 * grad_ssim.data()[i];
  }
  out.l1 = l1 * inv_n;
  out.total = (1.0 - lambda_dssim) * out.l1 + lambda_dssim * out.dssim;
  return out;
}

FlowDistillationLoss fds_loss(const FlowField& prior, const FlowField& radiance) {
  if (!prior.same_shape(radiance)) fail(ErrorCode::ShapeMismatch, "flow fields differ in shape");
  FlowDistillationLoss out;
  out.grad_du.assign(radiance.size(), 0.0);
  out.grad_dv.assign(radiance.size(), 0.0);
  for (std::size_t i = 0; i < radiance.size(); ++i)
    if (prior.valid[i] && radiance.valid[i]) ++out.valid_pixels;
  if (out.valid_pixels == 0) {
    out.no_valid_pixels = true;
    return out;
  }
  const double inv_n = 1.0 / static_cast<double>(out.valid_pixels);
  double sum = 0.0;
  for (std::size_t i = 0; i < radiance.size(); ++i) {
    if (!prior.valid[i] || !radiance.valid[i]) continue;
    const double ru = prior.du[i] - radiance.du[i];
    const double rv = prior.dv[i] - radiance.dv[i];
    const double norm = std::hypot(ru, rv);
    sum += norm;
    if (norm < 1e-8) continue;
    out.grad_du[i] = -ru / norm * inv_n;
    out.grad_dv[i] = -rv / norm * inv_n;
  }
  out.loss = sum * inv_n;
  return out;
}

}  // namespace fds
