// SPDX-License-Identifier: Apache-2.0
#include "fds/oracle.hpp"

#include <cmath>
#include <cstdio>

#include "fds/common.hpp"
#include "fds/rng.hpp"

namespace fds {

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::GroundTruth: return "ground_truth";
    case OracleKind::Noisy: return "noisy";
    case OracleKind::File: return "file";
  }
  return "unknown";
}

OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "ground_truth") return OracleKind::GroundTruth;
  if (name == "noisy") return OracleKind::Noisy;
  if (name == "file") return OracleKind::File;
  fail(ErrorCode::InvalidArgument, "unknown oracle kind '" + name + "'");
}

void OracleConfig::validate() const {
  if (!(sigma_n >= 0.0) || !std::isfinite(sigma_n))
    fail(ErrorCode::InvalidArgument, "oracle sigma_n must be non-negative");
  if (kind == OracleKind::File && pattern.empty())
    fail(ErrorCode::InvalidArgument, "file oracle needs a path pattern");
}

std::string expand_oracle_pattern(const std::string& pattern, int view_id, int iteration) {
  std::string out;
  std::size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] != '{') {
      out += pattern[i++];
      continue;
    }
    const std::size_t close = pattern.find('}', i);
    if (close == std::string::npos)
      fail(ErrorCode::InvalidArgument, "unterminated placeholder in '" + pattern + "'");
    const std::string token = pattern.substr(i + 1, close - i - 1);
    const std::size_t colon = token.find(':');
    const std::string name = token.substr(0, colon);
    int width = 0;
    if (colon != std::string::npos) {
      const std::string w = token.substr(colon + 1);
      if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos || w.size() > 2)
        fail(ErrorCode::InvalidArgument, "bad pad width in '{" + token + "}'");
      width = std::stoi(w);
    }
    int value = 0;
    if (name == "view") value = view_id;
    else if (name == "iter") value = iteration;
    else fail(ErrorCode::InvalidArgument, "unknown placeholder '{" + token + "}'");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, value);
    out += buf;
    i = close + 1;
  }
  return out;
}

namespace {

void invalidate_occluded(FlowField& flow, const Scene& scene, const Image& gt_depth,
                         const Camera& cam, const Camera& sampled) {
  Image depth_s;
  scene.geometry().render(sampled, nullptr, &depth_s);
  for (double& d : depth_s.data())
    if (!std::isfinite(d)) d = 0.0;
  const FlowField backward = radiance_flow(depth_s, sampled, cam);
  const auto [err, mask] = flow_roundtrip_error(radiance_flow(gt_depth, cam, sampled), backward);
  const auto e = err.data();
  const auto m = mask.data();
  for (std::size_t p = 0; p < flow.size(); ++p)
    if (m[p] == 0.0 || e[p] > kOcclusionRoundTripPx) flow.valid[p] = 0;
}

}  // namespace

FlowField prior_flow(const OracleConfig& oracle, const Scene& scene, int view_index,
                     const Camera& sampled, int iteration, std::uint64_t seed) {
  if (view_index < 0 || static_cast<std::size_t>(view_index) >= scene.manifest.views.size())
    fail(ErrorCode::InvalidArgument, "view index " + std::to_string(view_index) + " out of range");
  const SceneView& view = scene.manifest.views[view_index];
  const Camera& cam = view.camera;

  FlowField flow;
  if (oracle.kind == OracleKind::File) {
    std::filesystem::path path = expand_oracle_pattern(oracle.pattern, view.id, iteration);
    if (path.is_relative()) path = oracle.base_dir / path;
    if (!std::filesystem::exists(path))
      fail(ErrorCode::FileNotFound, "prior flow file " + path.string() + " not found");
    flow = read_flo(path);
    if (flow.width != cam.width || flow.height != cam.height)
      fail(ErrorCode::ShapeMismatch, "prior flow file " + path.string() + " has the wrong size");
  } else {
    if (static_cast<std::size_t>(view_index) >= scene.gt_depth.size() ||
        scene.gt_depth[view_index].empty())
      fail(ErrorCode::MissingGroundTruth, "no ground-truth depth for view " + std::to_string(view.id));
    flow = radiance_flow(scene.gt_depth[view_index], cam, sampled);
    if (oracle.kind == OracleKind::Noisy && oracle.sigma_n > 0.0) {
      Philox rng(derive_key(seed, {static_cast<std::uint64_t>(iteration),
                                   static_cast<std::uint64_t>(view.id)}),
                 streams::kOracleNoise);
      for (std::size_t p = 0; p < flow.size(); ++p) {
        const double nu = rng.normal();
        const double nv = rng.normal();
        if (!flow.valid[p]) continue;
        flow.du[p] += oracle.sigma_n * nu;
        flow.dv[p] += oracle.sigma_n * nv;
      }
    }
  }
  if (oracle.occlusion_aware) {
    if (static_cast<std::size_t>(view_index) >= scene.gt_depth.size() ||
        scene.gt_depth[view_index].empty())
      fail(ErrorCode::MissingGroundTruth, "occlusion check needs ground-truth depth");
    invalidate_occluded(flow, scene, scene.gt_depth[view_index], cam, sampled);
  }
  return flow;
}

}  // namespace fds
