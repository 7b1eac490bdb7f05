// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fds/geometry.hpp"
#include "fds/image.hpp"

namespace fds {

/// Per-pixel 2D displacement in pixels with a validity mask. Invalid pixels
/// are excluded from every reduction.
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<double> du;
  std::vector<double> dv;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w),
        height(h),
        du(static_cast<std::size_t>(w) * h, 0.0),
        dv(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::size_t size() const { return du.size(); }
  std::size_t valid_count() const;
  bool same_shape(const FlowField& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

/// Flow from view m to view n induced by depth in view m: every pixel is
/// unprojected with its depth, moved by the relative pose and reprojected;
/// flow = (u₂ − u₁, v₂ − v₁). Pixels are invalid when their depth is not
/// positive, when `source_mask` (if given) is zero there, when the
/// reprojection is behind camera n, or when it lands outside
/// [−0.5, W−0.5) × [−0.5, H−0.5). Throws ShapeMismatch.
FlowField radiance_flow(const Image& depth, const Camera& cam_m, const Camera& cam_n,
                        const Image* source_mask = nullptr);

/// Reverse-mode derivative of radiance_flow with respect to the source depth:
/// returns ∂L/∂depth given ∂L/∂du and ∂L/∂dv (zero at invalid pixels).
Image radiance_flow_backward(const Image& depth, const Camera& cam_m, const Camera& cam_n,
                             const FlowField& flow, std::span<const double> grad_du,
                             std::span<const double> grad_dv);

/// Closed form for a pure camera-frame translation t with t₃ = 0:
/// flow = (f_x t₁ / D, f_y t₂ / D). Same validity rules as radiance_flow.
/// Throws NonZeroT3 when |t₃| > 1e-12.
FlowField pure_translation_flow(const Image& depth, const Camera& cam, const Vec3& t,
                                const Image* source_mask = nullptr);

struct EndpointError {
  double mean = 0.0;
  Image error_map;  // H×W, zero outside the joint mask
  Image mask;       // H×W, 1 where both flows are valid
  std::size_t count = 0;
};

/// Per-pixel Euclidean distance between two flows over jointly valid pixels.
/// Throws ShapeMismatch or NoValidPixels.
EndpointError endpoint_error(const FlowField& a, const FlowField& b);

/// Bilinear lookup of `flow` at continuous (u, v); coordinates are clamped to
/// the pixel grid. Returns false when any contributing sample is invalid.
bool sample_flow_bilinear(const FlowField& flow, double u, double v, Vec2& out);

/// |F(x) + B(x + F(x))| for every pixel where the forward flow is valid and the
/// bilinear lookup of the backward flow succeeds. Returns the error image and
/// a mask of the pixels it was computed on.
std::pair<Image, Image> flow_roundtrip_error(const FlowField& forward, const FlowField& backward);

/// Pixels of view m that are visible in view n: the reprojected depth agrees
/// with view n's depth at all four bilinear neighbours within `rel_tol`.
Image covisibility_mask(const Image& depth_m, const Camera& cam_m, const Image& depth_n,
                        const Camera& cam_n, double rel_tol = 0.01);

// Middlebury .flo: float 202021.25, i32 width, i32 height, then row-major
// interleaved (du, dv) float32, little-endian. Invalid pixels are written as
// 1e10 and read back as invalid when either component exceeds 1e9.
inline constexpr float kFloMagic = 202021.25f;
inline constexpr float kFloInvalid = 1e10f;
std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const std::uint8_t> bytes);
void write_flo(const FlowField& flow, const std::filesystem::path& path);
FlowField read_flo(const std::filesystem::path& path);

/// Rounds du/dv to float32 so in-memory flows match their .flo encoding.
FlowField quantize_float(const FlowField& flow);

}  // namespace fds
