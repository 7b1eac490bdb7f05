// SPDX-License-Identifier: Apache-2.0
#include "fds/geometry.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "fds/common.hpp"

namespace fds {
namespace {
constexpr double kMinDepth = 1e-8;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if (((gram - Mat3::Identity()).cwiseAbs().array() > tol).any()) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner) {
  return {outer.rotation * inner.rotation, outer.rotation * inner.translation + outer.translation};
}

RigidTransform invert(const RigidTransform& t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

RigidTransform relative_transform(const RigidTransform& t_m, const RigidTransform& t_n) {
  return compose(t_n, invert(t_m));
}

Mat3 Camera::intrinsics() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy))
    fail(ErrorCode::InvalidArgument, "camera focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy))
    fail(ErrorCode::InvalidArgument, "camera principal point must be finite");
  if (width < 1 || height < 1)
    fail(ErrorCode::InvalidArgument, "camera image size must be at least 1x1");
  if (!pose.is_valid(1e-6)) fail(ErrorCode::InvalidArgument, "camera pose is not a rigid motion");
}

Projection project_camera_frame(const Vec3& p, const Camera& cam) {
  if (!(p.z() > kMinDepth))
    fail(ErrorCode::NonPositiveDepth, "point has depth " + std::to_string(p.z()));
  const double inv_z = 1.0 / p.z();
  return {{cam.fx * p.x() * inv_z + cam.cx, cam.fy * p.y() * inv_z + cam.cy}, p.z()};
}

Projection project(const Vec3& world, const Camera& cam) {
  return project_camera_frame(cam.pose.apply(world), cam);
}

Vec3 unproject(const Pixel& px, double depth, const Camera& cam) {
  if (!(depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "depth " + std::to_string(depth));
  return {(px.u - cam.cx) / cam.fx * depth, (px.v - cam.cy) / cam.fy * depth, depth};
}

Mat3 quaternion_to_rotation(const Vec4& q) {
  const double norm = q.norm();
  if (!(norm > 1e-12)) fail(ErrorCode::ZeroQuaternion, "quaternion norm is zero");
  const double w = q[0] / norm, x = q[1] / norm, y = q[2] / norm, z = q[3] / norm;
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& down) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = down.cross(forward);
  if (right.norm() < 1e-9) fail(ErrorCode::InvalidArgument, "look_at direction parallel to down");
  right.normalize();
  const Vec3 cam_down = forward.cross(right);
  RigidTransform t;
  t.rotation.row(0) = right.transpose();
  t.rotation.row(1) = cam_down.transpose();
  t.rotation.row(2) = forward.transpose();
  t.translation = -(t.rotation * eye);
  return t;
}

Vec3 camera_center(const Camera& cam) { return invert(cam.pose).translation; }

}  // namespace fds
