// SPDX-License-Identifier: Apache-2.0
#include "fds/gaussian_field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <Eigen/LU>

#include "fds/common.hpp"
#include "fds/rng.hpp"

namespace fds {
namespace {

inline std::uint64_t mix(std::uint64_t h, double v) {
  return splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
}

// Pixel-space footprint of a projected Gaussian, clipped to the image.
struct Footprint {
  int x0, x1, y0, y1;
  bool empty() const { return x0 > x1 || y0 > y1; }
};

Footprint footprint(const ProjectedGaussian& pg, int width, int height) {
  const double a = pg.cov(0, 0), b = pg.cov(0, 1), c = pg.cov(1, 1);
  const double half_diff = 0.5 * (a - c);
  const double lambda_max = 0.5 * (a + c) + std::sqrt(half_diff * half_diff + b * b);
  const double radius = 3.0 * std::sqrt(lambda_max);
  Footprint f;
  f.x0 = std::max(0, static_cast<int>(std::ceil(pg.center.u - radius)));
  f.x1 = std::min(width - 1, static_cast<int>(std::floor(pg.center.u + radius)));
  f.y0 = std::max(0, static_cast<int>(std::ceil(pg.center.v - radius)));
  f.y1 = std::min(height - 1, static_cast<int>(std::floor(pg.center.v + radius)));
  if (!std::isfinite(radius) || !std::isfinite(pg.center.u) || !std::isfinite(pg.center.v))
    f = {0, -1, 0, -1};
  return f;
}

}  // namespace

std::uint64_t camera_fingerprint(const Camera& cam) {
  std::uint64_t h = splitmix64((static_cast<std::uint64_t>(cam.width) << 32) ^
                               static_cast<std::uint64_t>(cam.height));
  for (double v : {cam.fx, cam.fy, cam.cx, cam.cy}) h = mix(h, v);
  for (int i = 0; i < 9; ++i) h = mix(h, cam.pose.rotation.data()[i]);
  for (int i = 0; i < 3; ++i) h = mix(h, cam.pose.translation[i]);
  return h;
}

std::uint64_t RenderOutput::structure_signature() const {
  std::uint64_t h = splitmix64(state.contributions.size());
  for (const auto& c : state.contributions) {
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.gaussian)) << 32 |
                        static_cast<std::uint32_t>(c.pixel)));
    h = splitmix64(h ^ static_cast<std::uint64_t>(c.clamped));
  }
  return h;
}

RenderOutput render_forward(const GaussianCloud& cloud, const Camera& cam,
                            const RenderSettings& settings) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "cannot render an empty cloud");
  const int width = cam.width, height = cam.height;
  const auto points = cloud.points();
  const std::size_t n = points.size();

  RenderOutput out;
  ForwardState& state = out.state;
  state.cloud_fingerprint = cloud.fingerprint();
  state.camera_fingerprint = camera_fingerprint(cam);
  state.projected.resize(n);

  std::vector<Footprint> footprints(n, Footprint{0, -1, 0, -1});
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cam.pose.apply(points[i].mu).z() > kNearClip)) continue;
    state.projected[i] = project_gaussian(points[i], cam);
    footprints[i] = footprint(state.projected[i], width, height);
    if (!footprints[i].empty()) state.order.push_back(static_cast<std::int32_t>(i));
  }
  std::stable_sort(state.order.begin(), state.order.end(), [&](std::int32_t a, std::int32_t b) {
    return state.projected[a].depth < state.projected[b].depth;
  });

  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  std::vector<double> transmittance(pixels, 1.0);
  std::vector<double> weight_sum(pixels, 0.0);
  std::vector<double> depth_sum(pixels, 0.0);
  std::vector<char> done(pixels, 0);
  out.color = Image(width, height, 3);
  auto color = out.color.data();

  for (const std::int32_t gi : state.order) {
    const ProjectedGaussian& pg = state.projected[gi];
    const Mat2 conic = pg.cov.inverse();
    const double opacity = points[gi].opacity();
    const Vec3 rgb = points[gi].color();
    const Footprint& f = footprints[gi];
    for (int y = f.y0; y <= f.y1; ++y) {
      const double dy = y - pg.center.v;
      for (int x = f.x0; x <= f.x1; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * width + x;
        if (done[pix]) continue;
        const double dx = x - pg.center.u;
        const double power =
            conic(0, 0) * dx * dx + 2.0 * conic(0, 1) * dx * dy + conic(1, 1) * dy * dy;
        double alpha = opacity * std::exp(-0.5 * power);
        if (!(alpha >= kAlphaMin)) continue;
        const bool clamped = alpha > kAlphaMax;
        if (clamped) alpha = kAlphaMax;
        const double t = transmittance[pix];
        const double next_t = t * (1.0 - alpha);
        if (next_t < kTransmittanceMin) {
          done[pix] = 1;
          continue;
        }
        const double w = alpha * t;
        for (int c = 0; c < 3; ++c) color[3 * pix + c] += w * rgb[c];
        weight_sum[pix] += w;
        depth_sum[pix] += w * pg.depth;
        transmittance[pix] = next_t;
        state.contributions.push_back(
            {gi, static_cast<std::int32_t>(pix), alpha, t, clamped});
      }
    }
  }

  out.depth = Image(width, height, 1);
  out.alpha_acc = Image(width, height, 1);
  auto depth = out.depth.data();
  auto acc = out.alpha_acc.data();
  for (std::size_t pix = 0; pix < pixels; ++pix) {
    const double a = weight_sum[pix];
    acc[pix] = std::min(a, 1.0);
    depth[pix] = a >= kAccumulatedAlphaMin ? depth_sum[pix] / a : settings.background_depth;
  }
  return out;
}

void render_backward(GaussianCloud& cloud, const Camera& cam, const RenderOutput& forward,
                     const Image& grad_color, const Image& grad_depth) {
  const ForwardState& state = forward.state;
  if (state.cloud_fingerprint != cloud.fingerprint() ||
      state.camera_fingerprint != camera_fingerprint(cam) ||
      state.projected.size() != cloud.size())
    fail(ErrorCode::StateMismatch, "forward state was produced from a different cloud or camera");
  const int width = cam.width, height = cam.height;
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  const bool has_color = !grad_color.empty();
  const bool has_depth = !grad_depth.empty();
  if (has_color && (grad_color.width() != width || grad_color.height() != height ||
                    grad_color.channels() != 3))
    fail(ErrorCode::ShapeMismatch, "color gradient does not match the render");
  if (has_depth && (grad_depth.width() != width || grad_depth.height() != height ||
                    grad_depth.channels() != 1))
    fail(ErrorCode::ShapeMismatch, "depth gradient does not match the render");
  if (!has_color && !has_depth) return;

  const auto points = cloud.points();
  const std::size_t n = points.size();

  // Per-pixel gradients of the depth quotient D = N / A.
  std::vector<double> weight_sum(pixels, 0.0);
  for (const auto& c : state.contributions) weight_sum[c.pixel] += c.alpha * c.transmittance;
  std::vector<double> grad_num(pixels, 0.0), grad_acc(pixels, 0.0);
  if (has_depth) {
    const auto gd = grad_depth.data();
    const auto depth = forward.depth.data();
    for (std::size_t pix = 0; pix < pixels; ++pix) {
      const double a = weight_sum[pix];
      if (a < kAccumulatedAlphaMin || gd[pix] == 0.0) continue;
      grad_num[pix] = gd[pix] / a;
      grad_acc[pix] = -gd[pix] * depth[pix] / a;
    }
  }

  struct Accum {
    Vec2 center = Vec2::Zero();
    Mat2 conic = Mat2::Zero();
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    double depth = 0.0;
  };
  std::vector<Accum> acc(n);
  std::vector<Mat2> conics(n);
  std::vector<Vec3> colors(n);
  std::vector<double> opacities(n);
  for (const std::int32_t gi : state.order) {
    conics[gi] = state.projected[gi].cov.inverse();
    colors[gi] = points[gi].color();
    opacities[gi] = points[gi].opacity();
  }

  std::vector<double> suffix(pixels, 0.0);
  const std::span<const double> gc = has_color ? grad_color.data() : std::span<const double>{};
  for (auto it = state.contributions.rbegin(); it != state.contributions.rend(); ++it) {
    const Contribution& k = *it;
    const std::int32_t gi = k.gaussian;
    const std::size_t pix = static_cast<std::size_t>(k.pixel);
    const double w = k.alpha * k.transmittance;
    const double d = state.projected[gi].depth;
    Accum& a = acc[gi];

    double s = grad_num[pix] * d + grad_acc[pix];
    if (has_color) {
      const Vec3 g(gc[3 * pix], gc[3 * pix + 1], gc[3 * pix + 2]);
      s += g.dot(colors[gi]);
      a.color += w * g;
    }
    a.depth += grad_num[pix] * w;
    const double grad_alpha = k.transmittance * s - suffix[pix] / (1.0 - k.alpha);
    suffix[pix] += w * s;
    if (k.clamped) continue;

    const ProjectedGaussian& pg = state.projected[gi];
    const Mat2& q = conics[gi];
    const Vec2 delta(static_cast<double>(pix % width) - pg.center.u,
                     static_cast<double>(pix / width) - pg.center.v);
    const double g = k.alpha / opacities[gi];
    a.opacity += grad_alpha * g;
    const double grad_power = -0.5 * grad_alpha * k.alpha;
    a.conic += grad_power * (delta * delta.transpose());
    a.center -= grad_power * 2.0 * (q * delta);
  }

  auto grads = cloud.grads();
  const Mat3& w_rot = cam.pose.rotation;
  for (const std::int32_t gi : state.order) {
    const Accum& a = acc[gi];
    const GaussianPoint& pt = points[gi];
    GaussianPoint& out = grads[gi];
    const ProjectedGaussian& pg = state.projected[gi];

    const double o = opacities[gi];
    out.opacity_logit += a.opacity * o * (1.0 - o);
    const Vec3& c = colors[gi];
    out.color_logit += a.color.cwiseProduct(c.cwiseProduct(Vec3::Ones() - c));

    const Mat2& q = conics[gi];
    const Mat2 grad_cov = -q * a.conic * q;

    const Vec3& p = pg.p_cam;
    const double iz = 1.0 / p.z(), iz2 = iz * iz, iz3 = iz2 * iz;
    const double fx = cam.fx, fy = cam.fy;
    Eigen::Matrix<double, 2, 3> jac;
    jac << fx * iz, 0.0, -fx * p.x() * iz2, 0.0, fy * iz, -fy * p.y() * iz2;
    const Eigen::Matrix<double, 2, 3> t = jac * w_rot;

    const Vec3 scale = pt.scale();
    const Mat3 rq = quaternion_to_rotation(pt.quat);
    const Mat3 m = rq * scale.asDiagonal();
    const Mat3 sigma = m * m.transpose();

    const Eigen::Matrix<double, 2, 3> grad_t = 2.0 * grad_cov * t * sigma;
    const Mat3 grad_sigma = t.transpose() * grad_cov * t;
    const Eigen::Matrix<double, 2, 3> grad_j = grad_t * w_rot.transpose();

    Vec3 grad_p = Vec3::Zero();
    grad_p.x() += a.center.x() * fx * iz;
    grad_p.y() += a.center.y() * fy * iz;
    grad_p.z() += -a.center.x() * fx * p.x() * iz2 - a.center.y() * fy * p.y() * iz2;
    grad_p.z() += -grad_j(0, 0) * fx * iz2;
    grad_p.x() += -grad_j(0, 2) * fx * iz2;
    grad_p.z() += grad_j(0, 2) * 2.0 * fx * p.x() * iz3;
    grad_p.z() += -grad_j(1, 1) * fy * iz2;
    grad_p.y() += -grad_j(1, 2) * fy * iz2;
    grad_p.z() += grad_j(1, 2) * 2.0 * fy * p.y() * iz3;
    grad_p.z() += a.depth;
    out.mu += w_rot.transpose() * grad_p;

    const Mat3 grad_m = 2.0 * grad_sigma * m;
    const Mat3 grad_r = grad_m * scale.asDiagonal();
    for (int j = 0; j < 3; ++j)
      out.log_scale[j] += grad_m.col(j).dot(rq.col(j)) * scale[j];

    const double qn = pt.quat.norm();
    const Vec4 nq = pt.quat / qn;
    const double qw = nq[0], qx = nq[1], qy = nq[2], qz = nq[3];
    const Mat3& gr = grad_r;
    Vec4 grad_n;
    grad_n[0] = 2.0 * (-qz * gr(0, 1) + qy * gr(0, 2) + qz * gr(1, 0) - qx * gr(1, 2) -
                       qy * gr(2, 0) + qx * gr(2, 1));
    grad_n[1] = 2.0 * (qy * gr(0, 1) + qz * gr(0, 2) + qy * gr(1, 0) - 2.0 * qx * gr(1, 1) -
                       qw * gr(1, 2) + qz * gr(2, 0) + qw * gr(2, 1) - 2.0 * qx * gr(2, 2));
    grad_n[2] = 2.0 * (-2.0 * qy * gr(0, 0) + qx * gr(0, 1) + qw * gr(0, 2) + qx * gr(1, 0) +
                       qz * gr(1, 2) - qw * gr(2, 0) + qz * gr(2, 1) - 2.0 * qy * gr(2, 2));
    grad_n[3] = 2.0 * (-2.0 * qz * gr(0, 0) - qw * gr(0, 1) + qx * gr(0, 2) + qw * gr(1, 0) -
                       2.0 * qz * gr(1, 1) + qy * gr(1, 2) + qx * gr(2, 0) + qy * gr(2, 1));
    out.quat += (grad_n - nq * nq.dot(grad_n)) / qn;
  }
}

}  // namespace fds
