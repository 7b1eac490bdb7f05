// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fds/geometry.hpp"
#include "fds/image.hpp"

namespace fds {

double sigmoid(double x) noexcept;
double logit(double p) noexcept;

/// One optimizable Gaussian, stored unconstrained: scales as logs, opacity
/// and color as logits, quaternion unnormalized (w, x, y, z).
struct GaussianPoint {
  Vec3 mu = Vec3::Zero();
  Vec3 log_scale = Vec3::Zero();
  Vec4 quat = Vec4(1.0, 0.0, 0.0, 0.0);
  double opacity_logit = 0.0;
  Vec3 color_logit = Vec3::Zero();

  Vec3 scale() const { return log_scale.array().exp(); }
  double opacity() const { return sigmoid(opacity_logit); }
  Vec3 color() const {
    return {sigmoid(color_logit.x()), sigmoid(color_logit.y()), sigmoid(color_logit.z())};
  }

  friend bool operator==(const GaussianPoint&, const GaussianPoint&) = default;
};

/// Flat parameter layout: mu(3) log_scale(3) quat(4) opacity_logit(1) color_logit(3).
inline constexpr int kParamsPerGaussian = 14;

enum class ParamClass { Position, Scale, Rotation, Opacity, Color };
inline constexpr int kParamClassCount = 5;

ParamClass param_class(int index);
double& param(GaussianPoint& g, int index);
double param(const GaussianPoint& g, int index);

/// The optimizable scene plus a gradient buffer of identical shape.
class GaussianCloud {
 public:
  GaussianCloud() = default;
  explicit GaussianCloud(std::vector<GaussianPoint> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  void add(const GaussianPoint& g);

  std::span<GaussianPoint> points() noexcept { return points_; }
  std::span<const GaussianPoint> points() const noexcept { return points_; }
  GaussianPoint& operator[](std::size_t i) { return points_[i]; }
  const GaussianPoint& operator[](std::size_t i) const { return points_[i]; }

  std::span<GaussianPoint> grads() noexcept { return grads_; }
  std::span<const GaussianPoint> grads() const noexcept { return grads_; }
  void zero_grad();

  /// Hash of every parameter bit; identifies the cloud a forward pass saw.
  std::uint64_t fingerprint() const;

  friend bool operator==(const GaussianCloud& a, const GaussianCloud& b) {
    return a.points_ == b.points_;
  }

 private:
  std::vector<GaussianPoint> points_;
  std::vector<GaussianPoint> grads_;
};

/// Σ = R S Sᵀ Rᵀ with S = diag(scale).
Mat3 build_covariance(const Vec3& scale, const Vec4& quat);

/// exp(-½ (X-μ)ᵀ Σ⁻¹ (X-μ)).
double eval_gaussian(const GaussianPoint& g, const Vec3& x);

/// Isotropic floor (px²) added to every projected covariance diagonal.
inline constexpr double kCovarianceFloor = 0.3;
/// Gaussians with camera-frame z at or below this are not rendered.
inline constexpr double kNearClip = 0.01;

struct ProjectedGaussian {
  Pixel center;
  Mat2 cov = Mat2::Identity();  // includes the floor
  double depth = 0.0;           // camera-frame z
  Vec3 p_cam = Vec3::Zero();
};

/// Local-affine (EWA) projection: cov2d = J W Σ Wᵀ Jᵀ + floor·I.
/// Throws BehindCamera when z <= kNearClip.
ProjectedGaussian project_gaussian(const GaussianPoint& g, const Camera& cam);

struct RenderSettings {
  double background_depth = 100.0;
};

inline constexpr double kAlphaMax = 0.999;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceMin = 1e-4;
inline constexpr double kAccumulatedAlphaMin = 1e-4;

/// One (Gaussian, pixel) pair that passed compositing, in front-to-back order
/// per pixel.
struct Contribution {
  std::int32_t gaussian = 0;
  std::int32_t pixel = 0;
  double alpha = 0.0;          // blended α̂ after clamping
  double transmittance = 0.0;  // product of (1 - α̂) of everything in front
  bool clamped = false;
};

/// What render_backward needs from the forward pass.
struct ForwardState {
  std::uint64_t cloud_fingerprint = 0;
  std::uint64_t camera_fingerprint = 0;
  std::vector<ProjectedGaussian> projected;  // indexed like the cloud
  std::vector<std::int32_t> order;           // depth-sorted visible Gaussians
  std::vector<Contribution> contributions;   // Gaussian-major, sorted order
};

struct RenderOutput {
  Image color;      // H×W×3
  Image depth;      // H×W
  Image alpha_acc;  // H×W
  ForwardState state;

  /// Hash of the discrete compositing structure (which pairs contribute and
  /// which are clamped). Two renders with equal signatures lie on the same
  /// smooth piece of the render function.
  std::uint64_t structure_signature() const;
};

std::uint64_t camera_fingerprint(const Camera& cam);

/// Front-to-back alpha compositing of color and normalized
/// alpha-blended depth. Throws EmptyCloud.
RenderOutput render_forward(const GaussianCloud& cloud, const Camera& cam,
                            const RenderSettings& settings = {});

/// Accumulates ∂L/∂params into cloud.grads() given ∂L/∂color (H×W×3) and
/// ∂L/∂depth (H×W). Either gradient image may be empty. Throws StateMismatch
/// when `forward` was produced from a different cloud or camera.
void render_backward(GaussianCloud& cloud, const Camera& cam, const RenderOutput& forward,
                     const Image& grad_color, const Image& grad_depth);

// Checkpoints: 16-byte header ("FDSGC\0", u16 version, u64 count, little
// endian) then 14 float32 per Gaussian in the flat parameter order.
inline constexpr std::uint16_t kCheckpointVersion = 1;
std::vector<std::uint8_t> encode_checkpoint(const GaussianCloud& cloud);
GaussianCloud decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const GaussianCloud& cloud, const std::filesystem::path& path);
GaussianCloud load_checkpoint(const std::filesystem::path& path);

}  // namespace fds
