// SPDX-License-Identifier: Apache-2.0
#include "fds/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fds/common.hpp"

namespace fds {
namespace {

bool inside_frame(double u, double v, int width, int height) {
  return u >= -0.5 && u < width - 0.5 && v >= -0.5 && v < height - 0.5;
}

void check_depth_shape(const Image& depth, const Camera& cam, const Image* mask) {
  if (depth.width() != cam.width || depth.height() != cam.height || depth.channels() != 1)
    fail(ErrorCode::ShapeMismatch, "depth map does not match the source camera");
  if (mask && (!mask->same_shape(depth)))
    fail(ErrorCode::ShapeMismatch, "source mask does not match the depth map");
}

bool source_ok(const Image& depth, const Image* mask, int x, int y) {
  const double d = depth(x, y);
  return d > 0.0 && std::isfinite(d) && (!mask || (*mask)(x, y) != 0.0);
}

}  // namespace

std::size_t FlowField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

FlowField radiance_flow(const Image& depth, const Camera& cam_m, const Camera& cam_n,
                        const Image* source_mask) {
  check_depth_shape(depth, cam_m, source_mask);
  const RigidTransform rel = relative_transform(cam_m.pose, cam_n.pose);
  FlowField flow(cam_m.width, cam_m.height);
  for (int y = 0; y < cam_m.height; ++y)
    for (int x = 0; x < cam_m.width; ++x) {
      if (!source_ok(depth, source_mask, x, y)) continue;
      const Vec3 q = rel.apply(unproject({double(x), double(y)}, depth(x, y), cam_m));
      if (!(q.z() > 1e-8)) continue;
      const double u2 = cam_n.fx * q.x() / q.z() + cam_n.cx;
      const double v2 = cam_n.fy * q.y() / q.z() + cam_n.cy;
      if (!inside_frame(u2, v2, cam_n.width, cam_n.height)) continue;
      const std::size_t i = flow.index(x, y);
      flow.du[i] = u2 - x;
      flow.dv[i] = v2 - y;
      flow.valid[i] = 1;
    }
  return flow;
}

Image radiance_flow_backward(const Image& depth, const Camera& cam_m, const Camera& cam_n,
                             const FlowField& flow, std::span<const double> grad_du,
                             std::span<const double> grad_dv) {
  check_depth_shape(depth, cam_m, nullptr);
  if (flow.width != cam_m.width || flow.height != cam_m.height ||
      grad_du.size() != flow.size() || grad_dv.size() != flow.size())
    fail(ErrorCode::ShapeMismatch, "flow gradient does not match the depth map");
  const RigidTransform rel = relative_transform(cam_m.pose, cam_n.pose);
  Image grad(cam_m.width, cam_m.height, 1);
  for (int y = 0; y < cam_m.height; ++y)
    for (int x = 0; x < cam_m.width; ++x) {
      const std::size_t i = flow.index(x, y);
      if (!flow.valid[i]) continue;
      const Vec3 ray((x - cam_m.cx) / cam_m.fx, (y - cam_m.cy) / cam_m.fy, 1.0);
      const Vec3 q = rel.apply(depth(x, y) * ray);
      const Vec3 dq = rel.rotation * ray;
      const double iz2 = 1.0 / (q.z() * q.z());
      const double du_dd = cam_n.fx * (dq.x() * q.z() - q.x() * dq.z()) * iz2;
      const double dv_dd = cam_n.fy * (dq.y() * q.z() - q.y() * dq.z()) * iz2;
      grad(x, y) = grad_du[i] * du_dd + grad_dv[i] * dv_dd;
    }
  return grad;
}

FlowField pure_translation_flow(const Image& depth, const Camera& cam, const Vec3& t,
                                const Image* source_mask) {
  if (std::abs(t.z()) > 1e-12)
    fail(ErrorCode::NonZeroT3, "closed-form flow needs t3 = 0, got " + std::to_string(t.z()));
  check_depth_shape(depth, cam, source_mask);
  FlowField flow(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      if (!source_ok(depth, source_mask, x, y)) continue;
      const double d = depth(x, y);
      const double du = cam.fx * t.x() / d;
      const double dv = cam.fy * t.y() / d;
      if (!inside_frame(x + du, y + dv, cam.width, cam.height)) continue;
      const std::size_t i = flow.index(x, y);
      flow.du[i] = du;
      flow.dv[i] = dv;
      flow.valid[i] = 1;
    }
  return flow;
}

EndpointError endpoint_error(const FlowField& a, const FlowField& b) {
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "flow fields differ in shape");
  EndpointError out;
  out.error_map = Image(a.width, a.height, 1);
  out.mask = Image(a.width, a.height, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    const double e = std::hypot(a.du[i] - b.du[i], a.dv[i] - b.dv[i]);
    out.error_map.data()[i] = e;
    out.mask.data()[i] = 1.0;
    sum += e;
    ++out.count;
  }
  if (out.count == 0) fail(ErrorCode::NoValidPixels, "flows share no valid pixel");
  out.mean = sum / static_cast<double>(out.count);
  return out;
}

bool sample_flow_bilinear(const FlowField& flow, double u, double v, Vec2& out) {
  u = std::clamp(u, 0.0, static_cast<double>(flow.width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(flow.height - 1));
  const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, flow.width - 1), y1 = std::min(y0 + 1, flow.height - 1);
  const double fx = u - x0, fy = v - y0;
  const int xs[2] = {x0, x1}, ys[2] = {y0, y1};
  const double wx[2] = {1.0 - fx, fx}, wy[2] = {1.0 - fy, fy};
  out.setZero();
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      const std::size_t k = flow.index(xs[i], ys[j]);
      if (!flow.valid[k]) return false;
      out += w * Vec2(flow.du[k], flow.dv[k]);
    }
  return true;
}

std::pair<Image, Image> flow_roundtrip_error(const FlowField& forward, const FlowField& backward) {
  Image err(forward.width, forward.height, 1), mask(forward.width, forward.height, 1);
  for (int y = 0; y < forward.height; ++y)
    for (int x = 0; x < forward.width; ++x) {
      const std::size_t i = forward.index(x, y);
      if (!forward.valid[i]) continue;
      Vec2 back;
      if (!sample_flow_bilinear(backward, x + forward.du[i], y + forward.dv[i], back)) continue;
      err(x, y) = std::hypot(forward.du[i] + back.x(), forward.dv[i] + back.y());
      mask(x, y) = 1.0;
    }
  return {err, mask};
}

Image covisibility_mask(const Image& depth_m, const Camera& cam_m, const Image& depth_n,
                        const Camera& cam_n, double rel_tol) {
  check_depth_shape(depth_m, cam_m, nullptr);
  check_depth_shape(depth_n, cam_n, nullptr);
  const RigidTransform rel = relative_transform(cam_m.pose, cam_n.pose);
  Image mask(cam_m.width, cam_m.height, 1);
  for (int y = 0; y < cam_m.height; ++y)
    for (int x = 0; x < cam_m.width; ++x) {
      const double d = depth_m(x, y);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const Vec3 q = rel.apply(unproject({double(x), double(y)}, d, cam_m));
      if (!(q.z() > 1e-8)) continue;
      const double u = cam_n.fx * q.x() / q.z() + cam_n.cx;
      const double v = cam_n.fy * q.y() / q.z() + cam_n.cy;
      if (!inside_frame(u, v, cam_n.width, cam_n.height)) continue;
      const double uc = std::clamp(u, 0.0, cam_n.width - 1.0);
      const double vc = std::clamp(v, 0.0, cam_n.height - 1.0);
      const int x0 = static_cast<int>(std::floor(uc)), y0 = static_cast<int>(std::floor(vc));
      const int x1 = std::min(x0 + 1, cam_n.width - 1), y1 = std::min(y0 + 1, cam_n.height - 1);
      bool ok = true;
      for (int yy : {y0, y1})
        for (int xx : {x0, x1})
          ok = ok && std::abs(depth_n(xx, yy) - q.z()) <= rel_tol * q.z();
      if (ok) mask(x, y) = 1.0;
    }
  return mask;
}

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  static_assert(std::endian::native == std::endian::little, "flo codec assumes little-endian");
  std::vector<std::uint8_t> out(12 + flow.size() * 8);
  const std::int32_t w = flow.width, h = flow.height;
  std::memcpy(out.data(), &kFloMagic, 4);
  std::memcpy(out.data() + 4, &w, 4);
  std::memcpy(out.data() + 8, &h, 4);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const float u = flow.valid[i] ? static_cast<float>(flow.du[i]) : kFloInvalid;
    const float v = flow.valid[i] ? static_cast<float>(flow.dv[i]) : kFloInvalid;
    std::memcpy(out.data() + 12 + 8 * i, &u, 4);
    std::memcpy(out.data() + 16 + 8 * i, &v, 4);
  }
  return out;
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) fail(ErrorCode::TruncatedFile, ".flo header is truncated");
  float magic;
  std::int32_t w, h;
  std::memcpy(&magic, bytes.data(), 4);
  if (magic != kFloMagic) fail(ErrorCode::BadMagic, ".flo magic mismatch");
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  if (w < 1 || h < 1) fail(ErrorCode::Validation, ".flo has non-positive size");
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < 12 + count * 8) fail(ErrorCode::TruncatedFile, ".flo payload is truncated");
  FlowField flow(w, h);
  for (std::size_t i = 0; i < count; ++i) {
    float u, v;
    std::memcpy(&u, bytes.data() + 12 + 8 * i, 4);
    std::memcpy(&v, bytes.data() + 16 + 8 * i, 4);
    const bool ok = std::isfinite(u) && std::isfinite(v) && std::abs(u) <= 1e9f &&
                    std::abs(v) <= 1e9f;
    flow.valid[i] = ok ? 1 : 0;
    flow.du[i] = ok ? u : 0.0;
    flow.dv[i] = ok ? v : 0.0;
  }
  return flow;
}

void write_flo(const FlowField& flow, const std::filesystem::path& path) {
  const auto bytes = encode_flo(flow);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + path.string());
}

FlowField read_flo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_flo(bytes);
}

FlowField quantize_float(const FlowField& flow) {
  FlowField out = flow;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out.valid[i]) {
      out.du[i] = out.dv[i] = 0.0;
      continue;
    }
    out.du[i] = static_cast<float>(out.du[i]);
    out.dv[i] = static_cast<float>(out.dv[i]);
  }
  return out;
}

}  // namespace fds
