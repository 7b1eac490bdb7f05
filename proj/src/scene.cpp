// SPDX-License-Identifier: Apache-2.0
#include "fds/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fds/common.hpp"
#include "fds/image_io.hpp"
#include "fds/rng.hpp"
#include "json_reader.hpp"

namespace fds {
namespace {
using json = nlohmann::ordered_json;
using detail::Reader;
using detail::with_path;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::array<int, 2> tangent_axes(int axis) {
  switch (axis) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

TexturedRect make_rect(int axis, double position, std::array<double, 2> lo,
                       std::array<double, 2> hi, Philox& rng) {
  TexturedRect r;
  r.axis = axis;
  r.position = position;
  r.lo = lo;
  r.hi = hi;
  for (int c = 0; c < 3; ++c) r.base_color[c] = 0.35 + 0.6 * rng.uniform();
  r.freq[0] = 0.3 + 0.4 * rng.uniform();
  r.freq[1] = 0.3 + 0.4 * rng.uniform();
  r.freq[2] = 0.6 + 0.5 * rng.uniform();
  r.freq[3] = 0.2 + 0.3 * rng.uniform();
  for (double& p : r.phase) p = kTwoPi * rng.uniform();
  r.orientation = std::numbers::pi * rng.uniform();
  return r;
}

// Faces of an axis-aligned box; the face on the +y side (resting on a
// floor) is omitted when `skip_bottom` is set.
void add_box(std::vector<TexturedRect>& out, const Vec3& center, double half, bool skip_bottom,
             Philox& rng) {
  for (int axis = 0; axis < 3; ++axis) {
    const auto ta = tangent_axes(axis);
    for (int side = -1; side <= 1; side += 2) {
      if (skip_bottom && axis == 1 && side == 1) continue;
      out.push_back(make_rect(axis, center[axis] + side * half,
                              {center[ta[0]] - half, center[ta[1]] - half},
                              {center[ta[0]] + half, center[ta[1]] + half}, rng));
    }
  }
}

Camera base_camera(const GeneratorParams& p) {
  Camera cam;
  cam.width = p.width;
  cam.height = p.height;
  const double half = 0.5 * p.fov_deg * std::numbers::pi / 180.0;
  cam.fx = 0.5 * p.width / std::tan(half);
  cam.fy = cam.fx;
  cam.cx = 0.5 * (p.width - 1);
  cam.cy = 0.5 * (p.height - 1);
  return cam;
}

std::vector<Camera> arc_cameras(const GeneratorParams& p) {
  const int total = p.n_views + p.n_test_views;
  std::vector<Camera> cams;
  cams.reserve(total);
  for (int k = 0; k < total; ++k) {
    const double s = total > 1 ? static_cast<double>(k) / (total - 1) : 0.5;
    Camera cam = base_camera(p);
    switch (p.kind) {
      case SceneKind::Plane: {
        const Vec3 eye(-0.5 + s, 0.0, 0.0);
        cam.pose = RigidTransform{Mat3::Identity(), -eye};
        break;
      }
      case SceneKind::TexturedRoom: {
        const double theta = (-20.0 + 40.0 * s) * std::numbers::pi / 180.0;
        const double y = 0.15 * ((k % 3) - 1);
        const Vec3 eye(3.0 * std::sin(theta), y, -1.0 - 3.0 * std::cos(theta));
        cam.pose = look_at(eye, Vec3(0.0, 1.5, 2.5));
        break;
      }
      case SceneKind::Box: {
        const double theta = (-35.0 + 70.0 * s) * std::numbers::pi / 180.0;
        const double y = -0.4 + 0.1 * ((k % 3) - 1);
        const Vec3 target(0.0, 0.4, 2.0);
        const Vec3 eye(2.2 * std::sin(theta), y, 2.0 - 2.2 * std::cos(theta));
        cam.pose = look_at(eye, target);
        break;
      }
    }
    cams.push_back(cam);
  }
  return cams;
}

std::vector<bool> test_mask(int total, int n_test) {
  std::vector<bool> is_test(total, false);
  for (int j = 0; j < n_test; ++j) {
    const auto idx = std::lround((j + 0.5) * total / n_test - 0.5);
    is_test[std::clamp<long>(idx, 0, total - 1)] = true;
  }
  return is_test;
}

// World-space ray through a continuous pixel, scaled so that the hit
// parameter equals camera z-depth.
std::pair<Vec3, Vec3> pixel_ray(const Camera& cam, double u, double v) {
  const Vec3 dir_cam((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
  const Mat3& r = cam.pose.rotation;
  return {camera_center(cam), r.transpose() * dir_cam};
}

double to_logit(double p) { return logit(std::clamp(p, 0.02, 0.98)); }

std::vector<double> knn_spacing(const std::vector<Vec3>& pts, int k) {
  std::vector<double> out(pts.size(), 0.1);
  if (pts.size() < 2) return out;
  const int kk = std::min<int>(k, static_cast<int>(pts.size()) - 1);
  std::vector<double> d2(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j)
      d2[j] = j == i ? std::numeric_limits<double>::infinity() : (pts[i] - pts[j]).squaredNorm();
    std::partial_sort(d2.begin(), d2.begin() + kk, d2.end());
    double sum = 0.0;
    for (int n = 0; n < kk; ++n) sum += std::sqrt(d2[n]);
    out[i] = std::max(sum / kk, 1e-4);
  }
  return out;
}

}  // namespace

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::TexturedRoom: return "textured_room";
    case SceneKind::Plane: return "plane";
    case SceneKind::Box: return "box";
  }
  return "unknown";
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "textured_room") return SceneKind::TexturedRoom;
  if (name == "plane") return SceneKind::Plane;
  if (name == "box") return SceneKind::Box;
  fail(ErrorCode::InvalidArgument, "unknown scene kind '" + name + "'");
}

std::string to_string(InitStrategy s) {
  return s == InitStrategy::GtSurfaceNoisy ? "gt_surface_noisy" : "random_box";
}

InitStrategy parse_init_strategy(const std::string& name) {
  if (name == "gt_surface_noisy") return InitStrategy::GtSurfaceNoisy;
  if (name == "random_box") return InitStrategy::RandomBox;
  fail(ErrorCode::InvalidArgument, "unknown init strategy '" + name + "'");
}

Vec3 TexturedRect::shade(const Vec3& point) const {
  const auto ta = tangent_axes(axis);
  const double a = point[ta[0]];
  const double b = point[ta[1]];
  const double diag = a * std::cos(orientation) + b * std::sin(orientation);
  const double pattern = 0.5 +
                         0.25 * std::sin(kTwoPi * freq[0] * a + phase[0]) *
                             std::sin(kTwoPi * freq[1] * b + phase[1]) +
                         0.15 * std::sin(kTwoPi * freq[2] * diag + phase[2]) +
                         0.1 * std::sin(kTwoPi * freq[3] * (a - b) + phase[3]);
  Vec3 c = base_color * (0.3 + 0.7 * pattern);
  return c.cwiseMax(0.02).cwiseMin(0.98);
}

SceneGeometry SceneGeometry::build(SceneKind kind, std::uint64_t seed) {
  SceneGeometry g;
  Philox rng(derive_key(seed, {}), streams::kTexture);
  switch (kind) {
    case SceneKind::TexturedRoom:
      // 10 x 6 x 8 room (y points down, floor at y = 3) with a cube against
      // the back wall and a smaller box on the floor.
      g.rects_.push_back(make_rect(0, -5.0, {-3.0, -4.0}, {3.0, 4.0}, rng));
      g.rects_.push_back(make_rect(0, 5.0, {-3.0, -4.0}, {3.0, 4.0}, rng));
      g.rects_.push_back(make_rect(1, -3.0, {-5.0, -4.0}, {5.0, 4.0}, rng));
      g.rects_.push_back(make_rect(1, 3.0, {-5.0, -4.0}, {5.0, 4.0}, rng));
      g.rects_.push_back(make_rect(2, -4.0, {-5.0, -3.0}, {5.0, 3.0}, rng));
      g.rects_.push_back(make_rect(2, 4.0, {-5.0, -3.0}, {5.0, 3.0}, rng));
      add_box(g.rects_, Vec3(0.5, 2.0, 3.0), 1.0, true, rng);
      add_box(g.rects_, Vec3(-2.5, 2.3, 2.0), 0.7, true, rng);
      g.lo_ = Vec3(-5.0, -3.0, -4.0);
      g.hi_ = Vec3(5.0, 3.0, 4.0);
      break;
    case SceneKind::Plane:
      g.rects_.push_back(make_rect(2, 2.0, {-50.0, -50.0}, {50.0, 50.0}, rng));
      g.lo_ = Vec3(-2.0, -2.0, 1.9);
      g.hi_ = Vec3(2.0, 2.0, 2.1);
      break;
    case SceneKind::Box:
      g.rects_.push_back(make_rect(2, 4.0, {-50.0, -50.0}, {50.0, 1.0}, rng));
      g.rects_.push_back(make_rect(1, 1.0, {-50.0, -4.0}, {50.0, 4.0}, rng));
      add_box(g.rects_, Vec3(0.0, 0.4, 2.0), 0.6, true, rng);
      g.lo_ = Vec3(-3.0, -2.0, 0.0);
      g.hi_ = Vec3(3.0, 1.0, 4.0);
      break;
  }
  return g;
}

std::optional<SceneGeometry::Hit> SceneGeometry::intersect(const Vec3& origin,
                                                           const Vec3& direction) const {
  std::optional<Hit> best;
  for (std::size_t i = 0; i < rects_.size(); ++i) {
    const TexturedRect& r = rects_[i];
    const double d = direction[r.axis];
    if (std::abs(d) < 1e-12) continue;
    const double t = (r.position - origin[r.axis]) / d;
    if (!(t > 1e-9)) continue;
    if (best && t >= best->t) continue;
    Vec3 p = origin + t * direction;
    p[r.axis] = r.position;
    const auto ta = tangent_axes(r.axis);
    if (p[ta[0]] < r.lo[0] || p[ta[0]] > r.hi[0] || p[ta[1]] < r.lo[1] || p[ta[1]] > r.hi[1])
      continue;
    best = Hit{t, p, static_cast<int>(i)};
  }
  return best;
}

void SceneGeometry::render(const Camera& cam, Image* color, Image* depth, Image* surface) const {
  if (color) *color = Image(cam.width, cam.height, 3);
  if (depth) *depth = Image(cam.width, cam.height, 1);
  if (surface) *surface = Image(cam.width, cam.height, 1, -1.0);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto [origin, dir] = pixel_ray(cam, x, y);
      const auto hit = intersect(origin, dir);
      if (depth) (*depth)(x, y) = hit ? hit->t : std::numeric_limits<double>::infinity();
      if (surface && hit) (*surface)(x, y) = hit->rect;
      if (color && hit) {
        const Vec3 c = rects_[hit->rect].shade(hit->point);
        for (int ch = 0; ch < 3; ++ch) (*color)(x, y, ch) = c[ch];
      }
    }
  }
}

void GeneratorParams::validate() const {
  if (n_views < 2) fail(ErrorCode::InvalidArgument, "n_views must be at least 2");
  if (n_test_views < 0) fail(ErrorCode::InvalidArgument, "n_test_views must be non-negative");
  if (width < 2 || height < 2) fail(ErrorCode::InvalidArgument, "image size must be at least 2x2");
  if (!(fov_deg > 1.0 && fov_deg < 170.0))
    fail(ErrorCode::InvalidArgument, "fov_deg must lie in (1, 170)");
}

void FloaterSpec::validate() const {
  if (count < 0) fail(ErrorCode::InvalidArgument, "floater count must be non-negative");
  if (!(opacity_min > 0.0 && opacity_min <= opacity_max && opacity_max < 1.0))
    fail(ErrorCode::InvalidArgument, "floater opacity range must satisfy 0 < min <= max < 1");
  if (!(depth_fraction_min > 0.0 && depth_fraction_min <= depth_fraction_max &&
        depth_fraction_max < 1.0))
    fail(ErrorCode::InvalidArgument, "floater depth fractions must satisfy 0 < min <= max < 1");
  if (!(size_px_min > 0.0 && size_px_min <= size_px_max))
    fail(ErrorCode::InvalidArgument, "floater size range must satisfy 0 < min <= max");
}

void InitSpec::validate() const {
  if (n_points < 1) fail(ErrorCode::InvalidArgument, "n_points must be at least 1");
  if (!(sigma_pos >= 0.0) || !std::isfinite(sigma_pos))
    fail(ErrorCode::InvalidArgument, "sigma_pos must be non-negative");
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor))
    fail(ErrorCode::InvalidArgument, "scale_factor must be positive");
  if (!(opacity > 0.0 && opacity < 1.0))
    fail(ErrorCode::InvalidArgument, "initial opacity must lie in (0, 1)");
  floaters.validate();
}

std::vector<int> SceneManifest::split_indices(const std::string& split) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < views.size(); ++i)
    if (views[i].split == split) out.push_back(static_cast<int>(i));
  return out;
}

Scene generate_scene(const GeneratorParams& params, const InitSpec& init) {
  params.validate();
  init.validate();
  Scene scene;
  scene.manifest.generator = params;
  scene.manifest.init = init;
  const SceneGeometry geometry = SceneGeometry::build(params.kind, params.seed);
  const auto cams = arc_cameras(params);
  const auto is_test = test_mask(static_cast<int>(cams.size()), params.n_test_views);

  double dmin = std::numeric_limits<double>::infinity();
  double dmax = 0.0;
  char name[32];
  for (std::size_t i = 0; i < cams.size(); ++i) {
    SceneView view;
    view.id = static_cast<int>(i);
    view.split = is_test[i] ? "test" : "train";
    view.camera = cams[i];
    std::snprintf(name, sizeof name, "%03zu", i);
    view.color_path = std::string("images/") + name + ".ppm";
    view.depth_path = std::string("depths/") + name + ".pfm";
    Image color, depth;
    geometry.render(view.camera, &color, &depth);
    for (double d : depth.data()) {
      if (!std::isfinite(d))
        fail(ErrorCode::NumericalFailure, "ground-truth ray escaped the scene in view " + std::string(name));
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
    scene.gt_color.push_back(quantize_8bit(color));
    scene.gt_depth.push_back(quantize_float(depth));
    scene.manifest.views.push_back(view);
  }
  scene.manifest.near = 0.9 * dmin;
  scene.manifest.far = 1.1 * dmax;
  return scene;
}

GaussianCloud init_cloud(const Scene& scene, const InitSpec& spec) {
  spec.validate();
  const auto train = scene.train_views();
  if (train.empty()) fail(ErrorCode::InvalidArgument, "scene has no training views");
  const SceneGeometry geometry = scene.geometry();
  const auto& views = scene.manifest.views;

  std::vector<Vec3> positions;
  std::vector<Vec3> colors;
  positions.reserve(spec.n_points);
  colors.reserve(spec.n_points);
  Philox rng(derive_key(spec.seed, {}), streams::kInit);
  if (spec.strategy == InitStrategy::GtSurfaceNoisy) {
    int attempts = 0;
    while (static_cast<int>(positions.size()) < spec.n_points) {
      if (++attempts > 100 * spec.n_points)
        fail(ErrorCode::NumericalFailure, "surface sampling found no geometry");
      const Camera& cam = views[train[rng.below(train.size())]].camera;
      const double u = rng.uniform() * cam.width - 0.5;
      const double v = rng.uniform() * cam.height - 0.5;
      const Vec3 noise(rng.normal(), rng.normal(), rng.normal());
      const auto [origin, dir] = pixel_ray(cam, u, v);
      const auto hit = geometry.intersect(origin, dir);
      if (!hit) continue;
      positions.push_back(hit->point + spec.sigma_pos * noise);
      colors.push_back(geometry.rects()[hit->rect].shade(hit->point));
    }
  } else {
    const Vec3 lo = geometry.bounds_min();
    const Vec3 extent = geometry.bounds_max() - lo;
    for (int i = 0; i < spec.n_points; ++i) {
      Vec3 p;
      for (int c = 0; c < 3; ++c) p[c] = lo[c] + extent[c] * (0.05 + 0.9 * rng.uniform());
      positions.push_back(p);
      colors.push_back(Vec3::Constant(0.5));
    }
  }

  const auto spacing = knn_spacing(positions, 3);
  GaussianCloud cloud;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    GaussianPoint g;
    g.mu = positions[i];
    g.log_scale = Vec3::Constant(std::log(spec.scale_factor * spacing[i]));
    g.opacity_logit = logit(spec.opacity);
    for (int c = 0; c < 3; ++c) g.color_logit[c] = to_logit(colors[i][c]);
    cloud.add(g);
  }

  if (spec.floaters.count > 0) {
    Vec3 mean_color = Vec3::Zero();
    double n = 0.0;
    for (int idx : train) {
      const Image& img = scene.gt_color[idx];
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
          for (int c = 0; c < 3; ++c) mean_color[c] += img(x, y, c);
          n += 1.0;
        }
    }
    mean_color /= std::max(n, 1.0);

    const FloaterSpec& fs = spec.floaters;
    Philox frng(derive_key(spec.seed, {}), streams::kFloaters);
    int placed = 0;
    int attempts = 0;
    while (placed < fs.count) {
      if (++attempts > 100 * fs.count)
        fail(ErrorCode::NumericalFailure, "floater placement found no geometry");
      const Camera& cam = views[train[frng.below(train.size())]].camera;
      const double u = (0.1 + 0.8 * frng.uniform()) * cam.width - 0.5;
      const double v = (0.1 + 0.8 * frng.uniform()) * cam.height - 0.5;
      const double frac = fs.depth_fraction_min +
                          (fs.depth_fraction_max - fs.depth_fraction_min) * frng.uniform();
      const double size_px = fs.size_px_min + (fs.size_px_max - fs.size_px_min) * frng.uniform();
      const double opacity = fs.opacity_min + (fs.opacity_max - fs.opacity_min) * frng.uniform();
      const auto [origin, dir] = pixel_ray(cam, u, v);
      const auto hit = geometry.intersect(origin, dir);
      if (!hit) continue;
      const double z = frac * hit->t;
      GaussianPoint g;
      g.mu = origin + z * dir;
      g.log_scale = Vec3::Constant(std::log(size_px * z / cam.mean_focal()));
      g.opacity_logit = logit(opacity);
      for (int c = 0; c < 3; ++c) g.color_logit[c] = to_logit(mean_color[c]);
      cloud.add(g);
      ++placed;
    }
  }
  return cloud;
}

// ---- persistence ----

namespace {

json camera_json(const Camera& cam) {
  json j;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  json rot = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation(r, c));
  j["rotation"] = rot;
  j["translation"] = {cam.pose.translation.x(), cam.pose.translation.y(),
                      cam.pose.translation.z()};
  return j;
}

Camera camera_from(const Reader& r) {
  Camera cam;
  cam.width = static_cast<int>(r.integer("width"));
  cam.height = static_cast<int>(r.integer("height"));
  cam.fx = r.number("fx");
  cam.fy = r.number("fy");
  cam.cx = r.number("cx");
  cam.cy = r.number("cy");
  const auto rot = r.numbers("rotation", 9);
  for (int i = 0; i < 9; ++i) cam.pose.rotation(i / 3, i % 3) = rot[i];
  const auto t = r.numbers("translation", 3);
  cam.pose.translation = Vec3(t[0], t[1], t[2]);
  return cam;
}

}  // namespace

std::string manifest_to_json(const SceneManifest& m) {
  json j;
  j["format"] = "fds-scene";
  j["version"] = 1;
  const GeneratorParams& g = m.generator;
  j["generator"] = {{"kind", to_string(g.kind)},   {"seed", g.seed},
                    {"views", g.n_views},          {"test_views", g.n_test_views},
                    {"width", g.width},            {"height", g.height},
                    {"fov_deg", g.fov_deg}};
  const InitSpec& s = m.init;
  const FloaterSpec& f = s.floaters;
  j["init"] = {{"strategy", to_string(s.strategy)},
               {"points", s.n_points},
               {"sigma_pos", s.sigma_pos},
               {"opacity", s.opacity},
               {"scale_factor", s.scale_factor},
               {"seed", s.seed},
               {"floaters",
                {{"count", f.count},
                 {"opacity_min", f.opacity_min},
                 {"opacity_max", f.opacity_max},
                 {"depth_fraction_min", f.depth_fraction_min},
                 {"depth_fraction_max", f.depth_fraction_max},
                 {"size_px_min", f.size_px_min},
                 {"size_px_max", f.size_px_max}}}};
  j["near"] = m.near;
  j["far"] = m.far;
  j["initial_checkpoint"] = m.initial_checkpoint;
  json views = json::array();
  for (const SceneView& v : m.views) {
    json jv;
    jv["id"] = v.id;
    jv["split"] = v.split;
    jv["camera"] = camera_json(v.camera);
    jv["color"] = v.color_path;
    jv["depth"] = v.depth_path;
    views.push_back(jv);
  }
  j["views"] = views;
  return j.dump(2) + "\n";
}

SceneManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Validation, std::string("scene manifest is not valid JSON: ") + e.what());
  }
  const Reader root(j, "");
  if (root.string("format") != "fds-scene")
    fail(ErrorCode::Validation, "format: expected \"fds-scene\"");
  if (root.integer("version") != 1) fail(ErrorCode::Validation, "version: unsupported");

  SceneManifest m;
  const Reader g(root.at("generator"), "generator");
  with_path("generator.kind", [&] { m.generator.kind = parse_scene_kind(g.string("kind")); });
  m.generator.seed = g.unsigned_integer("seed");
  m.generator.n_views = static_cast<int>(g.integer("views"));
  m.generator.n_test_views = static_cast<int>(g.integer("test_views"));
  m.generator.width = static_cast<int>(g.integer("width"));
  m.generator.height = static_cast<int>(g.integer("height"));
  m.generator.fov_deg = g.number("fov_deg");
  with_path("generator", [&] { m.generator.validate(); });

  const Reader s(root.at("init"), "init");
  with_path("init.strategy", [&] { m.init.strategy = parse_init_strategy(s.string("strategy")); });
  m.init.n_points = static_cast<int>(s.integer("points"));
  m.init.sigma_pos = s.number("sigma_pos");
  m.init.opacity = s.number("opacity");
  m.init.scale_factor = s.number("scale_factor");
  m.init.seed = s.unsigned_integer("seed");
  const Reader f(s.at("floaters"), "init.floaters");
  FloaterSpec& fs = m.init.floaters;
  fs.count = static_cast<int>(f.integer("count"));
  fs.opacity_min = f.number("opacity_min");
  fs.opacity_max = f.number("opacity_max");
  fs.depth_fraction_min = f.number("depth_fraction_min");
  fs.depth_fraction_max = f.number("depth_fraction_max");
  fs.size_px_min = f.number("size_px_min");
  fs.size_px_max = f.number("size_px_max");
  with_path("init", [&] { m.init.validate(); });

  m.near = root.number("near");
  m.far = root.number("far");
  if (!(m.near > 0.0 && m.near < m.far && std::isfinite(m.far)))
    fail(ErrorCode::Validation, "near/far: expected 0 < near < far");
  m.initial_checkpoint = root.string("initial_checkpoint");

  const json& jviews = root.at("views");
  if (!jviews.is_array() || jviews.empty())
    fail(ErrorCode::Validation, "views: expected a non-empty array");
  std::set<int> ids;
  for (std::size_t i = 0; i < jviews.size(); ++i) {
    const std::string path = "views[" + std::to_string(i) + "]";
    const Reader rv(jviews[i], path);
    SceneView v;
    v.id = static_cast<int>(rv.integer("id"));
    if (!ids.insert(v.id).second) fail(ErrorCode::Validation, path + ".id: duplicate view id");
    v.split = rv.string("split");
    if (v.split != "train" && v.split != "test")
      fail(ErrorCode::Validation, path + ".split: expected \"train\" or \"test\"");
    v.camera = camera_from(Reader(rv.at("camera"), path + ".camera"));
    with_path(path + ".camera", [&] { v.camera.validate(); });
    v.color_path = rv.string("color");
    v.depth_path = rv.string("depth");
    m.views.push_back(v);
  }
  if (m.split_indices("train").empty())
    fail(ErrorCode::Validation, "views: no view has split \"train\"");
  return m;
}

void save_scene(const Scene& scene, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto& m = scene.manifest;
  if (scene.gt_color.size() != m.views.size() || scene.gt_depth.size() != m.views.size())
    fail(ErrorCode::InvalidArgument, "scene images do not match its views");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    const fs::path color = dir / m.views[i].color_path;
    const fs::path depth = dir / m.views[i].depth_path;
    fs::create_directories(color.parent_path(), ec);
    fs::create_directories(depth.parent_path(), ec);
    write_ppm(scene.gt_color[i], color);
    write_pfm(scene.gt_depth[i], depth);
  }
  std::ofstream out(dir / kManifestName, std::ios::binary);
  out << manifest_to_json(m);
  if (!out) fail(ErrorCode::Io, "cannot write " + (dir / kManifestName).string());
}

Scene load_scene(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = fs::is_directory(path) ? path / kManifestName : path;
  const fs::path root = manifest_path.parent_path();
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "cannot open " + manifest_path.string());
  std::stringstream text;
  text << in.rdbuf();

  Scene scene;
  scene.manifest = manifest_from_json(text.str());
  const auto& m = scene.manifest;
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    const SceneView& v = m.views[i];
    const std::string where = "views[" + std::to_string(i) + "]";
    const fs::path color = root / v.color_path;
    const fs::path depth = root / v.depth_path;
    if (!fs::exists(color)) fail(ErrorCode::FileNotFound, where + ".color: missing file " + color.string());
    if (!fs::exists(depth)) fail(ErrorCode::FileNotFound, where + ".depth: missing file " + depth.string());
    Image c = read_ppm(color);
    Image d = read_pfm(depth);
    if (c.width() != v.camera.width || c.height() != v.camera.height || c.channels() != 3)
      fail(ErrorCode::Validation, where + ".color: " + color.string() + " is " +
                                      std::to_string(c.width()) + "x" + std::to_string(c.height()) +
                                      ", camera declares " + std::to_string(v.camera.width) + "x" +
                                      std::to_string(v.camera.height));
    if (d.width() != v.camera.width || d.height() != v.camera.height || d.channels() != 1)
      fail(ErrorCode::Validation, where + ".depth: " + depth.string() + " is " +
                                      std::to_string(d.width()) + "x" + std::to_string(d.height()) +
                                      ", camera declares " + std::to_string(v.camera.width) + "x" +
                                      std::to_string(v.camera.height));
    for (double z : d.data())
      if (!(z >= m.near && z <= m.far))
        fail(ErrorCode::Validation, where + ".depth: value " + std::to_string(z) +
                                        " outside [near, far]");
    scene.gt_color.push_back(std::move(c));
    scene.gt_depth.push_back(std::move(d));
  }
  return scene;
}

}  // namespace fds
