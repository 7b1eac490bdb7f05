// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fds/flow.hpp"
#include "fds/gaussian_field.hpp"
#include "fds/metrics.hpp"
#include "fds/optimizer.hpp"
#include "fds/oracle.hpp"
#include "fds/sampling.hpp"
#include "fds/scene.hpp"

namespace fds {

struct LossWeights {
  double lambda_dssim = 0.2;
  double lambda_normal = 0.0;  // accepted for completeness; must stay 0
  double lambda_fds = 0.015;

  void validate() const;
};

struct TrainSchedule {
  int total_iters = 3000;
  int fds_start_iter = 1000;
  int batch = 1;
  int eval_every = 100;         // metrics.csv cadence; 0 writes only the final row
  int checkpoint_every = 1000;  // 0 disables intermediate checkpoints
  LearningRates lr;

  void validate() const;
};

struct TrainConfig {
  TrainSchedule schedule;
  LossWeights weights;
  SamplerConfig sampler;
  OracleConfig oracle;
  std::uint64_t seed = 0;  // view schedule and oracle noise

  void validate() const;
};

/// The flow-distillation inputs for one view: where the unobserved camera
/// sits and what the prior says the flow into it should be.
struct FdsTerm {
  Camera sampled;
  FlowField prior;
};

struct ViewLoss {
  double total = 0.0;  // photometric + λ_fds · fds (when present)
  double l1 = 0.0;
  double dssim = 0.0;
  std::optional<double> fds;
  std::size_t fds_valid_pixels = 0;
  bool fds_no_valid_pixels = false;
};

/// Evaluates the photometric loss of `render` (a forward pass of `cloud` at
/// `cam`) against `gt` and, when `fds` is given, the flow-distillation loss
/// of its depth against the prior. Adds `weight` · ∂total/∂params to
/// cloud.grads() without clearing them first. The flow term is only
/// backpropagated when λ_fds > 0.
ViewLoss view_loss_and_grad(GaussianCloud& cloud, const Camera& cam, const RenderOutput& render,
                            const Image& gt, const LossWeights& weights, const FdsTerm* fds,
                            double weight);

struct StepReport {
  int iter = 0;
  std::vector<int> views;
  double loss_total = 0.0;  // batch means
  double loss_l1 = 0.0;
  double loss_dssim = 0.0;
  std::optional<double> loss_fds;
  double eps_t = 0.0;  // mean over the batch, 0 before FDS starts
  int fds_empty_views = 0;
  std::array<double, kParamClassCount> grad_norm{};
};

/// Training views used at `iter`; position b in the batch is keyed by
/// (seed, iter, b).
std::vector<int> scheduled_views(const Scene& scene, std::uint64_t seed, int iter, int batch);

/// One optimizer update. Throws NumericalFailure on a non-finite loss.
StepReport train_step(GaussianCloud& cloud, Adam& adam, const Scene& scene,
                      const TrainConfig& cfg, int iter);

inline constexpr const char* kMetricsHeader =
    "iter,loss_total,loss_l1,loss_dssim,loss_fds,abs_rel,psnr,eps_t";

struct MetricsRow {
  int iter = 0;
  std::optional<double> loss_total, loss_l1, loss_dssim, loss_fds;
  double abs_rel = 0.0;  // held-out mean
  double psnr = 0.0;
  std::optional<double> eps_t;

  std::string to_csv() const;
};

struct TrainResult {
  GaussianCloud cloud;
  std::vector<MetricsRow> trace;
  int fds_empty_views = 0;
};

/// Runs total_iters steps from `init`. With an output directory it writes
/// metrics.csv, ckpt_NNNNNN.fdsgc every checkpoint_every iterations and
/// final.fdsgc; a divergence writes diverged.json before throwing.
/// Metric rows are taken at iteration 0, every eval_every iterations and at
/// the end; their loss columns average the steps since the previous row.
TrainResult train(const Scene& scene, GaussianCloud init, const TrainConfig& cfg,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                  const std::function<void(const MetricsRow&)>& on_row = {});

/// Renders every view of a split ("train", "test" or "all").
EvalReport evaluate_split(const Scene& scene, const GaussianCloud& cloud, const std::string& split,
                          std::vector<RenderOutput>* renders = nullptr);

std::vector<int> split_views(const Scene& scene, const std::string& split);

struct ErrorMapConfig {
  int samples = 8;
  int first_sample = 0;  // sample k uses the substream keyed by (seed, view id, k)
  SamplerConfig sampler;
  OracleConfig oracle;
  std::uint64_t seed = 0;
};

struct ErrorMap {
  int view_id = 0;
  Image radiance_epe;  // per-pixel mean over the samples where it was valid
  Image prior_epe;
  Image radiance_count;
  Image prior_count;
  double radiance_mean = 0.0;  // pooled over every valid (pixel, sample)
  double prior_mean = 0.0;
  std::size_t radiance_pixels = 0;
  std::size_t prior_pixels = 0;
};

/// Endpoint error of radiance flow (from the rendered depth) and of prior
/// flow, both against the flow implied by ground-truth depth, averaged over
/// `samples` sampled views around one input view. Throws MissingGroundTruth.
ErrorMap error_map(const Scene& scene, const GaussianCloud& cloud, int view_index,
                   const ErrorMapConfig& cfg);

}  // namespace fds
