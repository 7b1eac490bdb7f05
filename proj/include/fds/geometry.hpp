// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace fds {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Rigid motion p' = rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// Orthonormal with det +1, within tol per entry.
  bool is_valid(double tol = 1e-9) const;
};

/// outer ∘ inner: applies inner first.
RigidTransform compose(const RigidTransform& outer, const RigidTransform& inner);
RigidTransform invert(const RigidTransform& t);

/// Maps camera-m coordinates to camera-n coordinates (T_n ∘ T_m⁻¹) for two
/// world-to-camera transforms.
RigidTransform relative_transform(const RigidTransform& t_m, const RigidTransform& t_n);

/// Continuous pixel coordinates; integer values sit on pixel centers.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole camera. Looks down +z; u grows right, v grows down. `pose` is the
/// world-to-camera transform.
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  RigidTransform pose;

  Mat3 intrinsics() const;
  /// (fx + fy) / 2, used where a single focal length is needed.
  double mean_focal() const { return 0.5 * (fx + fy); }
  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

/// Projects a camera-frame point. Throws NonPositiveDepth when z <= 1e-8.
Projection project_camera_frame(const Vec3& p_cam, const Camera& cam);
/// Projects a world point through the camera pose.
Projection project(const Vec3& world, const Camera& cam);
/// Camera-frame point at `depth` (z) behind pixel `px`. Throws NonPositiveDepth.
Vec3 unproject(const Pixel& px, double depth, const Camera& cam);

/// Rotation of the normalized quaternion (w, x, y, z). Throws ZeroQuaternion
/// when |q| <= 1e-12.
Mat3 quaternion_to_rotation(const Vec4& q);

/// World-to-camera pose of a camera at `eye` looking at `target`, with image
/// v axis aligned to the world `down` direction as far as possible.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& down = Vec3(0, 1, 0));

/// World-space center of a camera.
Vec3 camera_center(const Camera& cam);

}  // namespace fds
