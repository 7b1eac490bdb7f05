// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "fds/trainer.hpp"

namespace fds {

/// Everything a training run needs. Loaded as a JSON tree whose keys mirror
/// the fields below; every key is optional and unknown keys are rejected:
///
///   { "scene": "...", "out": "...", "init": "...", "seed": 0,
///     "schedule": { "total_iters", "fds_start_iter", "batch", "eval_every",
///                   "checkpoint_every",
///                   "lr": { "position_init", "position_final", "scale",
///                           "rotation", "opacity", "color" } },
///     "weights": { "lambda_dssim", "lambda_normal", "lambda_fds" },
///     "sampler": { "sigma", "mode": "random" | "fixed:<xi>", "seed" },
///     "oracle": { "kind", "sigma_n", "pattern", "occlusion_aware" } }
struct RunConfig {
  std::filesystem::path scene;
  std::filesystem::path out;
  std::optional<std::filesystem::path> init;  // default: the scene's initial checkpoint
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> sampler_seed;  // default: seed
  TrainConfig train;

  /// `train` with the sampler seed filled in.
  TrainConfig resolved() const;
  void validate() const;
};

/// Overlays the keys present in `text` onto `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

/// Fully resolved snapshot: every field written explicitly.
std::string run_config_to_json(const RunConfig& cfg);

/// "random" or "fixed:<xi>".
std::string sampler_mode_string(const SamplerConfig& cfg);
void parse_sampler_mode(const std::string& text, SamplerConfig& cfg);

/// "ground_truth", "noisy:<sigma_n>" or "file:<pattern>".
void parse_oracle_spec(const std::string& text, OracleConfig& cfg);

}  // namespace fds
