// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fds/gaussian_field.hpp"
#include "fds/geometry.hpp"
#include "fds/image.hpp"

namespace fds {

enum class SceneKind { TexturedRoom, Plane, Box };
std::string to_string(SceneKind kind);
SceneKind parse_scene_kind(const std::string& name);

/// Axis-aligned textured rectangle: the plane coordinate[axis] = position,
/// bounded on the two remaining axes.
struct TexturedRect {
  int axis = 2;
  double position = 0.0;
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
  Vec3 base_color = Vec3::Constant(0.5);
  std::array<double, 4> freq{};
  std::array<double, 4> phase{};
  double orientation = 0.0;

  Vec3 shade(const Vec3& point) const;
};

/// Analytic scene used for ground truth; rendering never goes through the
/// splatting renderer.
class SceneGeometry {
 public:
  static SceneGeometry build(SceneKind kind, std::uint64_t seed);

  struct Hit {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    int rect = -1;
  };
  std::optional<Hit> intersect(const Vec3& origin, const Vec3& direction) const;

  /// Ray-traces z-depth and color at every pixel center. Pixels whose ray
  /// escapes get depth +inf and black.
  /// Any output may be null. `surface` receives the hit rectangle index, or
  /// -1 where the ray escapes.
  void render(const Camera& cam, Image* color, Image* depth, Image* surface = nullptr) const;

  const std::vector<TexturedRect>& rects() const { return rects_; }
  Vec3 bounds_min() const { return lo_; }
  Vec3 bounds_max() const { return hi_; }

 private:
  std::vector<TexturedRect> rects_;
  Vec3 lo_ = Vec3::Zero(), hi_ = Vec3::Zero();
};

struct GeneratorParams {
  SceneKind kind = SceneKind::TexturedRoom;
  std::uint64_t seed = 0;
  int n_views = 12;
  int n_test_views = 4;
  int width = 64;
  int height = 64;
  double fov_deg = 40.0;

  void validate() const;
};

struct FloaterSpec {
  int count = 40;
  double opacity_min = 0.6;
  double opacity_max = 0.95;
  double depth_fraction_min = 0.3;   // of the GT depth along the seeding ray
  double depth_fraction_max = 0.7;
  double size_px_min = 1.5;          // projected standard deviation
  double size_px_max = 3.5;

  void validate() const;
};

enum class InitStrategy { GtSurfaceNoisy, RandomBox };
std::string to_string(InitStrategy s);
InitStrategy parse_init_strategy(const std::string& name);

struct InitSpec {
  InitStrategy strategy = InitStrategy::GtSurfaceNoisy;
  int n_points = 1500;
  double sigma_pos = 0.05;
  double opacity = 0.7;
  double scale_factor = 0.5;  // splat size relative to mean 3-NN spacing
  std::uint64_t seed = 0;
  FloaterSpec floaters;

  void validate() const;
};

struct SceneView {
  int id = 0;
  std::string split;  // "train" or "test"
  Camera camera;
  std::string color_path;
  std::string depth_path;
};

struct SceneManifest {
  GeneratorParams generator;
  InitSpec init;
  double near = 0.0;
  double far = 0.0;
  std::string initial_checkpoint = "init.fdsgc";
  std::vector<SceneView> views;

  std::vector<int> split_indices(const std::string& split) const;
};

/// A manifest with its ground-truth images loaded; gt_color[i] and
/// gt_depth[i] belong to manifest.views[i].
struct Scene {
  SceneManifest manifest;
  std::vector<Image> gt_color;
  std::vector<Image> gt_depth;

  SceneGeometry geometry() const {
    return SceneGeometry::build(manifest.generator.kind, manifest.generator.seed);
  }
  std::vector<int> train_views() const { return manifest.split_indices("train"); }
  std::vector<int> test_views() const { return manifest.split_indices("test"); }
};

/// Cameras on an inward-facing arc, ground truth ray-traced from the analytic
/// geometry, then quantized exactly as the files will store it.
Scene generate_scene(const GeneratorParams& params, const InitSpec& init = {});

/// Surface-seeded (or box-random) cloud plus appended floaters.
GaussianCloud init_cloud(const Scene& scene, const InitSpec& spec);

/// Writes scene.json, images/*.ppm and depths/*.pfm under `dir`.
void save_scene(const Scene& scene, const std::filesystem::path& dir);
/// Loads and validates a scene directory (or a path to its scene.json).
Scene load_scene(const std::filesystem::path& path);

std::string manifest_to_json(const SceneManifest& manifest);
SceneManifest manifest_from_json(const std::string& text);

inline constexpr const char* kManifestName = "scene.json";

}  // namespace fds
