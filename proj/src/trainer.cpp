// SPDX-License-Identifier: Apache-2.0
#include "fds/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fds/common.hpp"
#include "fds/losses.hpp"
#include "fds/rng.hpp"

namespace fds {
namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

Image alpha_mask(const Image& alpha_acc) {
  Image mask(alpha_acc.width(), alpha_acc.height(), 1);
  for (std::size_t i = 0; i < mask.data().size(); ++i)
    mask.data()[i] = alpha_acc.data()[i] > kAccumulatedAlphaMin ? 1.0 : 0.0;
  return mask;
}

RenderSettings settings_for(const Scene& scene) { return RenderSettings{scene.manifest.far}; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int iter) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_%06d.fdsgc", iter);
  return dir / name;
}

// Running sums for the loss columns of the next metrics row.
struct Window {
  int steps = 0;
  int fds_steps = 0;
  double total = 0.0, l1 = 0.0, dssim = 0.0, fds = 0.0, eps = 0.0;

  void add(const StepReport& r) {
    ++steps;
    total += r.loss_total;
    l1 += r.loss_l1;
    dssim += r.loss_dssim;
    if (r.loss_fds) {
      ++fds_steps;
      fds += *r.loss_fds;
      eps += r.eps_t;
    }
  }
};

MetricsRow make_row(int iter, const Window& w, const EvalReport& eval) {
  MetricsRow row;
  row.iter = iter;
  if (w.steps > 0) {
    row.loss_total = w.total / w.steps;
    row.loss_l1 = w.l1 / w.steps;
    row.loss_dssim = w.dssim / w.steps;
  }
  if (w.fds_steps > 0) {
    row.loss_fds = w.fds / w.fds_steps;
    row.eps_t = w.eps / w.fds_steps;
  }
  row.abs_rel = eval.mean_abs_rel;
  row.psnr = eval.mean_psnr;
  return row;
}

}  // namespace

void LossWeights::validate() const {
  if (!finite_nonneg(lambda_dssim) || lambda_dssim > 1.0)
    fail(ErrorCode::InvalidArgument, "lambda_dssim must lie in [0, 1]");
  if (lambda_normal != 0.0)
    fail(ErrorCode::InvalidArgument, "lambda_normal is not supported and must be 0");
  if (!finite_nonneg(lambda_fds)) fail(ErrorCode::InvalidArgument, "lambda_fds must be non-negative");
}

void TrainSchedule::validate() const {
  if (total_iters < 0) fail(ErrorCode::InvalidArgument, "total_iters must be non-negative");
  if (fds_start_iter < 0 || fds_start_iter > total_iters)
    fail(ErrorCode::InvalidArgument, "fds_start_iter must lie in [0, total_iters]");
  if (batch < 1) fail(ErrorCode::InvalidArgument, "batch must be at least 1");
  if (eval_every < 0) fail(ErrorCode::InvalidArgument, "eval_every must be non-negative");
  if (checkpoint_every < 0) fail(ErrorCode::InvalidArgument, "checkpoint_every must be non-negative");
  lr.validate();
}

void TrainConfig::validate() const {
  schedule.validate();
  weights.validate();
  sampler.validate();
  oracle.validate();
}

ViewLoss view_loss_and_grad(GaussianCloud& cloud, const Camera& cam, const RenderOutput& render,
                            const Image& gt, const LossWeights& weights, const FdsTerm* fds,
                            double weight) {
  PhotometricLoss photo = photometric_loss(render.color, gt, weights.lambda_dssim);
  ViewLoss out;
  out.l1 = photo.l1;
  out.dssim = photo.dssim;
  out.total = photo.total;
  for (double& g : photo.grad_color.data()) g *= weight;

  Image grad_depth;
  if (fds) {
    const Image mask = alpha_mask(render.alpha_acc);
    const FlowField radiance = radiance_flow(render.depth, cam, fds->sampled, &mask);
    FlowDistillationLoss term = fds_loss(fds->prior, radiance);
    out.fds = term.loss;
    out.fds_valid_pixels = term.valid_pixels;
    out.fds_no_valid_pixels = term.no_valid_pixels;
    out.total += weights.lambda_fds * term.loss;
    if (weights.lambda_fds > 0.0 && !term.no_valid_pixels) {
      const double k = weights.lambda_fds * weight;
      for (double& g : term.grad_du) g *= k;
      for (double& g : term.grad_dv) g *= k;
      grad_depth =
          radiance_flow_backward(render.depth, cam, fds->sampled, radiance, term.grad_du, term.grad_dv);
    }
  }
  render_backward(cloud, cam, render, photo.grad_color, grad_depth);
  return out;
}

std::vector<int> scheduled_views(const Scene& scene, std::uint64_t seed, int iter, int batch) {
  const auto train_ids = scene.train_views();
  if (train_ids.empty()) fail(ErrorCode::InvalidArgument, "scene has no training views");
  std::vector<int> out;
  for (int b = 0; b < batch; ++b) {
    Philox rng(derive_key(seed, {static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(b)}),
               streams::kViewSchedule);
    out.push_back(train_ids[rng.below(train_ids.size())]);
  }
  return out;
}

StepReport train_step(GaussianCloud& cloud, Adam& adam, const Scene& scene,
                      const TrainConfig& cfg, int iter) {
  const TrainSchedule& sched = cfg.schedule;
  if (iter < 0 || iter >= sched.total_iters)
    fail(ErrorCode::InvalidArgument, "iteration outside the schedule");
  if (scene.gt_color.size() != scene.manifest.views.size())
    fail(ErrorCode::MissingGroundTruth, "scene has no ground-truth images loaded");

  StepReport report;
  report.iter = iter;
  report.views = scheduled_views(scene, cfg.seed, iter, sched.batch);
  const bool fds_on = iter >= sched.fds_start_iter;
  const RenderSettings settings = settings_for(scene);
  const double weight = 1.0 / sched.batch;

  cloud.zero_grad();
  double fds_sum = 0.0;
  for (int b = 0; b < sched.batch; ++b) {
    const int v = report.views[b];
    const Camera& cam = scene.manifest.views[v].camera;
    const RenderOutput render = render_forward(cloud, cam, settings);
    std::optional<FdsTerm> term;
    if (fds_on) {
      const double mean_depth =
          std::max(masked_mean_depth(render.depth, render.alpha_acc), kMinMeanDepth);
      Philox rng(derive_key(cfg.sampler.rng_seed,
                            {static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(b)}),
                 streams::kCameraSampling);
      const SampledView sv = sample_view(cam, mean_depth, cfg.sampler, rng);
      term = FdsTerm{sv.camera, prior_flow(cfg.oracle, scene, v, sv.camera, iter, cfg.seed)};
      report.eps_t += sv.eps_t * weight;
    }
    const ViewLoss vl = view_loss_and_grad(cloud, cam, render, scene.gt_color[v], cfg.weights,
                                           term ? &*term : nullptr, weight);
    report.loss_total += vl.total * weight;
    report.loss_l1 += vl.l1 * weight;
    report.loss_dssim += vl.dssim * weight;
    if (vl.fds) fds_sum += *vl.fds * weight;
    if (vl.fds_no_valid_pixels) ++report.fds_empty_views;
  }
  if (fds_on) report.loss_fds = fds_sum;

  if (!std::isfinite(report.loss_total))
    fail(ErrorCode::NumericalFailure, "non-finite loss at iteration " + std::to_string(iter));

  for (const GaussianPoint& g : cloud.grads())
    for (int k = 0; k < kParamsPerGaussian; ++k) {
      const double v = param(g, k);
      report.grad_norm[static_cast<int>(param_class(k))] += v * v;
    }
  for (double& n : report.grad_norm) n = std::sqrt(n);

  adam.step(cloud, iter, sched.total_iters);
  return report;
}

std::string MetricsRow::to_csv() const {
  return std::to_string(iter) + "," + fmt(loss_total) + "," + fmt(loss_l1) + "," +
         fmt(loss_dssim) + "," + fmt(loss_fds) + "," + fmt(abs_rel) + "," + fmt(psnr) + "," +
         fmt(eps_t);
}

TrainResult train(const Scene& scene, GaussianCloud init, const TrainConfig& cfg,
                  const std::optional<std::filesystem::path>& out_dir,
                  const std::function<void(const MetricsRow&)>& on_row) {
  cfg.validate();
  if (init.empty()) fail(ErrorCode::EmptyCloud, "initial cloud is empty");
  TrainResult result;
  result.cloud = std::move(init);
  GaussianCloud& cloud = result.cloud;
  const TrainSchedule& sched = cfg.schedule;
  const std::string eval_split = scene.test_views().empty() ? "train" : "test";

  std::ofstream csv;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    csv.open(*out_dir / "metrics.csv", std::ios::binary);
    if (!csv) fail(ErrorCode::Io, "cannot write " + (*out_dir / "metrics.csv").string());
    csv << kMetricsHeader << "\n";
  }
  auto emit = [&](int iter, Window& w) {
    result.trace.push_back(make_row(iter, w, evaluate_split(scene, cloud, eval_split)));
    if (csv.is_open()) csv << result.trace.back().to_csv() << "\n" << std::flush;
    if (on_row) on_row(result.trace.back());
    w = Window{};
  };

  Window window;
  emit(0, window);
  Adam adam(cloud.size(), sched.lr);
  for (int iter = 0; iter < sched.total_iters; ++iter) {
    StepReport r;
    try {
      r = train_step(cloud, adam, scene, cfg, iter);
    } catch (const Error& e) {
      if (out_dir && e.code() == ErrorCode::NumericalFailure) {
        nlohmann::ordered_json dump = {{"iter", iter}, {"error", e.what()}};
        write_text(*out_dir / "diverged.json", dump.dump(2) + "\n");
        save_checkpoint(cloud, *out_dir / "diverged.fdsgc");
      }
      throw;
    }
    result.fds_empty_views += r.fds_empty_views;
    window.add(r);
    const int done = iter + 1;
    if (done == sched.total_iters || (sched.eval_every > 0 && done % sched.eval_every == 0))
      emit(done, window);
    if (out_dir && sched.checkpoint_every > 0 && done % sched.checkpoint_every == 0)
      save_checkpoint(cloud, checkpoint_path(*out_dir, done));
  }
  if (out_dir) save_checkpoint(cloud, *out_dir / "final.fdsgc");
  return result;
}

std::vector<int> split_views(const Scene& scene, const std::string& split) {
  if (split == "all") {
    std::vector<int> all(scene.manifest.views.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }
  if (split != "train" && split != "test")
    fail(ErrorCode::InvalidArgument, "unknown split '" + split + "' (expected train, test or all)");
  return scene.manifest.split_indices(split);
}

EvalReport evaluate_split(const Scene& scene, const GaussianCloud& cloud, const std::string& split,
                          std::vector<RenderOutput>* renders) {
  const auto ids = split_views(scene, split);
  if (scene.gt_color.size() != scene.manifest.views.size() ||
      scene.gt_depth.size() != scene.manifest.views.size())
    fail(ErrorCode::MissingGroundTruth, "scene has no ground truth loaded");
  EvalReport report;
  report.split = split;
  const RenderSettings settings = settings_for(scene);
  for (int v : ids) {
    RenderOutput r = render_forward(cloud, scene.manifest.views[v].camera, settings);
    ViewMetrics m;
    m.view_id = scene.manifest.views[v].id;
    const Image mask = depth_eval_mask(scene.gt_depth[v], r.alpha_acc);
    for (double x : mask.data()) m.depth_pixels += x != 0.0;
    m.abs_rel = m.depth_pixels ? abs_rel(r.depth, scene.gt_depth[v], mask) : 0.0;
    m.psnr = psnr(r.color, scene.gt_color[v]);
    m.ssim = ssim(r.color, scene.gt_color[v]);
    report.views.push_back(m);
    if (renders) renders->push_back(std::move(r));
  }
  report.finalize();
  return report;
}

ErrorMap error_map(const Scene& scene, const GaussianCloud& cloud, int view_index,
                   const ErrorMapConfig& cfg) {
  if (cfg.samples < 1) fail(ErrorCode::InvalidArgument, "samples must be at least 1");
  if (cfg.first_sample < 0) fail(ErrorCode::InvalidArgument, "first_sample must be non-negative");
  cfg.sampler.validate();
  cfg.oracle.validate();
  if (view_index < 0 || view_index >= static_cast<int>(scene.manifest.views.size()))
    fail(ErrorCode::InvalidArgument, "view index out of range");
  if (scene.gt_depth.size() != scene.manifest.views.size())
    fail(ErrorCode::MissingGroundTruth, "error maps need ground-truth depth");

  const SceneView& view = scene.manifest.views[view_index];
  const Camera& cam = view.camera;
  const RenderOutput render = render_forward(cloud, cam, settings_for(scene));
  const Image mask = alpha_mask(render.alpha_acc);
  const double mean_depth =
      std::max(masked_mean_depth(render.depth, render.alpha_acc), kMinMeanDepth);

  ErrorMap out;
  out.view_id = view.id;
  out.radiance_epe = out.prior_epe = Image(cam.width, cam.height, 1);
  out.radiance_count = out.prior_count = Image(cam.width, cam.height, 1);
  double r_sum = 0.0, p_sum = 0.0;
  auto accumulate = [](const FlowField& a, const FlowField& b, Image& sum, Image& count,
                       double& total, std::size_t& n) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a.valid[i] || !b.valid[i]) continue;
      const double e = std::hypot(a.du[i] - b.du[i], a.dv[i] - b.dv[i]);
      sum.data()[i] += e;
      count.data()[i] += 1.0;
      total += e;
      ++n;
    }
  };
  for (int s = 0; s < cfg.samples; ++s) {
    const int k = cfg.first_sample + s;
    Philox rng(derive_key(cfg.seed, {static_cast<std::uint64_t>(view.id), static_cast<std::uint64_t>(k)}),
               streams::kErrorMap);
    const SampledView sv = sample_view(cam, mean_depth, cfg.sampler, rng);
    const FlowField truth = radiance_flow(scene.gt_depth[view_index], cam, sv.camera);
    const FlowField radiance = radiance_flow(render.depth, cam, sv.camera, &mask);
    const FlowField prior = prior_flow(cfg.oracle, scene, view_index, sv.camera, k, cfg.seed);
    accumulate(radiance, truth, out.radiance_epe, out.radiance_count, r_sum, out.radiance_pixels);
    accumulate(prior, truth, out.prior_epe, out.prior_count, p_sum, out.prior_pixels);
  }
  for (std::size_t i = 0; i < out.radiance_epe.data().size(); ++i) {
    if (out.radiance_count.data()[i] > 0) out.radiance_epe.data()[i] /= out.radiance_count.data()[i];
    if (out.prior_count.data()[i] > 0) out.prior_epe.data()[i] /= out.prior_count.data()[i];
  }
  if (out.radiance_pixels == 0 || out.prior_pixels == 0)
    fail(ErrorCode::NoValidPixels, "no pixel had both a sampled flow and a ground-truth flow");
  out.radiance_mean = r_sum / out.radiance_pixels;
  out.prior_mean = p_sum / out.prior_pixels;
  return out;
}

}  // namespace fds
