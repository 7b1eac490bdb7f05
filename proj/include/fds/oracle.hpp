// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fds/flow.hpp"
#include "fds/geometry.hpp"
#include "fds/scene.hpp"

namespace fds {

enum class OracleKind { GroundTruth, Noisy, File };
std::string to_string(OracleKind kind);
OracleKind parse_oracle_kind(const std::string& name);

/// Stand-in for a pretrained flow network queried on (input image, sampled
/// camera). Every mode is independent of the Gaussian parameters.
struct OracleConfig {
  OracleKind kind = OracleKind::GroundTruth;
  double sigma_n = 0.0;      // noisy: per-component std in pixels
  std::string pattern;       // file: path pattern, see expand_oracle_pattern
  std::filesystem::path base_dir;  // file: relative patterns resolve here
  bool occlusion_aware = false;

  void validate() const;
};

/// Replaces `{view}` and `{iter}` in a pattern; `{view:N}` / `{iter:N}`
/// zero-pad to N digits. Example: "flows/v{view:03}_i{iter:05}.flo".
std::string expand_oracle_pattern(const std::string& pattern, int view_id, int iteration);

/// Prior flow from view `view_index` of the scene into `sampled`. Noise in
/// noisy mode is keyed by (seed, iteration, view id). Throws
/// MissingGroundTruth or FileNotFound.
FlowField prior_flow(const OracleConfig& oracle, const Scene& scene, int view_index,
                     const Camera& sampled, int iteration, std::uint64_t seed);

/// Threshold of the ground-truth forward/backward consistency check used in
/// occlusion-aware mode.
inline constexpr double kOcclusionRoundTripPx = 0.5;

}  // namespace fds
