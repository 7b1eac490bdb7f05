// SPDX-License-Identifier: Apache-2.0
#include "fds/gaussian_field.hpp"

#include <bit>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "fds/common.hpp"
#include "fds/rng.hpp"

namespace fds {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

ParamClass param_class(int index) {
  if (index < 3) return ParamClass::Position;
  if (index < 6) return ParamClass::Scale;
  if (index < 10) return ParamClass::Rotation;
  if (index < 11) return ParamClass::Opacity;
  return ParamClass::Color;
}

double& param(GaussianPoint& g, int index) {
  switch (index) {
    case 0: case 1: case 2: return g.mu[index];
    case 3: case 4: case 5: return g.log_scale[index - 3];
    case 6: case 7: case 8: case 9: return g.quat[index - 6];
    case 10: return g.opacity_logit;
    case 11: case 12: case 13: return g.color_logit[index - 11];
    default: fail(ErrorCode::InvalidArgument, "parameter index " + std::to_string(index));
  }
}

double param(const GaussianPoint& g, int index) {
  return param(const_cast<GaussianPoint&>(g), index);
}

GaussianCloud::GaussianCloud(std::vector<GaussianPoint> points)
    : points_(std::move(points)), grads_(points_.size()) {
  zero_grad();
}

void GaussianCloud::add(const GaussianPoint& g) {
  points_.push_back(g);
  GaussianPoint zero;
  zero.quat.setZero();
  grads_.push_back(zero);
}

void GaussianCloud::zero_grad() {
  for (auto& g : grads_) {
    g.mu.setZero();
    g.log_scale.setZero();
    g.quat.setZero();
    g.opacity_logit = 0.0;
    g.color_logit.setZero();
  }
}

std::uint64_t GaussianCloud::fingerprint() const {
  std::uint64_t h = splitmix64(points_.size());
  for (const auto& g : points_)
    for (int k = 0; k < kParamsPerGaussian; ++k)
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(param(g, k)));
  return h;
}

Mat3 build_covariance(const Vec3& scale, const Vec4& quat) {
  const Mat3 m = quaternion_to_rotation(quat) * scale.asDiagonal();
  return m * m.transpose();
}

double eval_gaussian(const GaussianPoint& g, const Vec3& x) {
  const Mat3 sigma = build_covariance(g.scale(), g.quat);
  const Vec3 d = x - g.mu;
  return std::exp(-0.5 * d.dot(sigma.ldlt().solve(d)));
}

ProjectedGaussian project_gaussian(const GaussianPoint& g, const Camera& cam) {
  const Vec3 p = cam.pose.apply(g.mu);
  if (!(p.z() > kNearClip))
    fail(ErrorCode::BehindCamera, "Gaussian center at camera depth " + std::to_string(p.z()));
  const double inv_z = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> jac;
  jac << cam.fx * inv_z, 0.0, -cam.fx * p.x() * inv_z * inv_z,
      0.0, cam.fy * inv_z, -cam.fy * p.y() * inv_z * inv_z;
  const Eigen::Matrix<double, 2, 3> t = jac * cam.pose.rotation;
  ProjectedGaussian out;
  out.p_cam = p;
  out.depth = p.z();
  out.center = {cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy};
  out.cov = t * build_covariance(g.scale(), g.quat) * t.transpose();
  out.cov(0, 0) += kCovarianceFloor;
  out.cov(1, 1) += kCovarianceFloor;
  return out;
}

}  // namespace fds
