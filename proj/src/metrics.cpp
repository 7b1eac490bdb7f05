// SPDX-License-Identifier: Apache-2.0
#include "fds/metrics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fds/common.hpp"
#include "fds/gaussian_field.hpp"

namespace fds {
namespace {

const std::array<double, kSsimWindow>& ssim_kernel() {
  static const auto kernel = [] {
    std::array<double, kSsimWindow> k{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double x = i - kSsimWindow / 2;
      k[i] = std::exp(-x * x / (2.0 * kSsimSigma * kSsimSigma));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();
  return kernel;
}

// Same-size separable Gaussian blur with zero padding on one plane. The
// kernel is symmetric, so this operator is its own adjoint.
std::vector<double> blur(const std::vector<double>& in, int w, int h) {
  const auto& k = ssim_kernel();
  constexpr int r = kSsimWindow / 2;
  std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int xx = x + j;
        if (xx >= 0 && xx < w) s += k[j + r] * in[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j) {
        const int yy = y + j;
        if (yy >= 0 && yy < h) s += k[j + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  return out;
}

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b) || a.empty())
    fail(ErrorCode::ShapeMismatch, std::string(what) + ": images differ in shape");
}

}  // namespace

double abs_rel(const Image& pred, const Image& gt, const Image& mask) {
  check_same(pred, gt, "abs_rel");
  check_same(pred, mask, "abs_rel mask");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    if (mask.data()[i] == 0.0) continue;
    const double g = gt.data()[i];
    sum += std::abs(pred.data()[i] - g) / g;
    ++count;
  }
  if (count == 0) fail(ErrorCode::NoValidPixels, "abs_rel has no valid pixel");
  return sum / static_cast<double>(count);
}

double psnr(const Image& pred, const Image& gt) {
  check_same(pred, gt, "psnr");
  double sse = 0.0;
  for (std::size_t i = 0; i < gt.data().size(); ++i) {
    const double d = pred.data()[i] - gt.data()[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(gt.data().size());
  if (mse < 1e-12) return kPsnrCap;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) { return ssim_with_gradient(a, b, nullptr); }

double ssim_with_gradient(const Image& a, const Image& b, Image* grad_a) {
  check_same(a, b, "ssim");
  const int w = a.width(), h = a.height(), channels = a.channels();
  const std::size_t n = a.pixel_count();
  const double norm = 1.0 / static_cast<double>(n * channels);
  if (grad_a) *grad_a = Image(w, h, channels);

  double total = 0.0;
  std::vector<double> pa(n), pb(n), paa(n), pbb(n), pab(n);
  for (int c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = a.data()[i * channels + c], y = b.data()[i * channels + c];
      pa[i] = x;
      pb[i] = y;
      paa[i] = x * x;
      pbb[i] = y * y;
      pab[i] = x * y;
    }
    const auto mu1 = blur(pa, w, h), mu2 = blur(pb, w, h);
    const auto e11 = blur(paa, w, h), e22 = blur(pbb, w, h), e12 = blur(pab, w, h);

    std::vector<double> d_mu(n), d_e11(n), d_e12(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double m1 = mu1[i], m2 = mu2[i];
      const double s11 = e11[i] - m1 * m1, s22 = e22[i] - m2 * m2, s12 = e12[i] - m1 * m2;
      const double a1 = 2.0 * m1 * m2 + kSsimC1, a2 = 2.0 * s12 + kSsimC2;
      const double b1 = m1 * m1 + m2 * m2 + kSsimC1, b2 = s11 + s22 + kSsimC2;
      const double den = b1 * b2;
      const double s = a1 * a2 / den;
      total += s;
      if (!grad_a) continue;
      d_mu[i] = (2.0 * m2 * (a2 - a1) - s * 2.0 * m1 * (b2 - b1)) / den * norm;
      d_e11[i] = -s / b2 * norm;
      d_e12[i] = 2.0 * a1 / den * norm;
    }
    if (!grad_a) continue;
    const auto g_mu = blur(d_mu, w, h), g_e11 = blur(d_e11, w, h), g_e12 = blur(d_e12, w, h);
    for (std::size_t i = 0; i < n; ++i)
      grad_a->data()[i * channels + c] = g_mu[i] + 2.0 * pa[i] * g_e11[i] + pb[i] * g_e12[i];
  }
  return total * norm;
}

Image depth_eval_mask(const Image& gt_depth, const Image& alpha_acc) {
  check_same(gt_depth, alpha_acc, "depth mask");
  Image mask(gt_depth.width(), gt_depth.height(), 1);
  for (std::size_t i = 0; i < gt_depth.data().size(); ++i) {
    const double g = gt_depth.data()[i];
    if (std::isfinite(g) && g > 0.0 && alpha_acc.data()[i] > kAccumulatedAlphaMin)
      mask.data()[i] = 1.0;
  }
  return mask;
}

void EvalReport::finalize() {
  mean_abs_rel = mean_psnr = mean_ssim = 0.0;
  depth_pixels = 0;
  if (views.empty()) return;
  for (const auto& v : views) {
    mean_abs_rel += v.abs_rel;
    mean_psnr += v.psnr;
    mean_ssim += v.ssim;
    depth_pixels += v.depth_pixels;
  }
  const double inv = 1.0 / static_cast<double>(views.size());
  mean_abs_rel *= inv;
  mean_psnr *= inv;
  mean_ssim *= inv;
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "view,abs_rel,psnr,ssim,depth_pixels\n";
  for (const auto& v : views)
    out << v.view_id << ',' << v.abs_rel << ',' << v.psnr << ',' << v.ssim << ','
        << v.depth_pixels << '\n';
  out << "mean," << mean_abs_rel << ',' << mean_psnr << ',' << mean_ssim << ',' << depth_pixels
      << '\n';
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["mean"] = {{"abs_rel", mean_abs_rel}, {"psnr", mean_psnr}, {"ssim", mean_ssim},
               {"depth_pixels", depth_pixels}};
  auto& arr = j["views"] = nlohmann::ordered_json::array();
  for (const auto& v : views)
    arr.push_back({{"view", v.view_id}, {"abs_rel", v.abs_rel}, {"psnr", v.psnr},
                   {"ssim", v.ssim}, {"depth_pixels", v.depth_pixels}});
  return j.dump(2) + "\n";
}

}  // namespace fds
