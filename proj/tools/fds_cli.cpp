// SPDX-License-Identifier: Apache-2.0
// fds: scene generation, training, evaluation and flow error maps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fds/common.hpp"
#include "fds/flow.hpp"
#include "fds/image_io.hpp"
#include "fds/run_config.hpp"
#include "fds/scene.hpp"
#include "fds/trainer.hpp"

namespace fs = std::filesystem;
using namespace fds;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kExitUsage;
    case ErrorCode::NumericalFailure:
    case ErrorCode::NoValidPixels: return kExitNumerical;
    default: return kExitIo;
  }
}

void report_error(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string view_name(int id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", id);
  return buf;
}

fs::path scene_root(const fs::path& p) { return fs::is_directory(p) ? p : p.parent_path(); }

GaussianCloud load_cloud(const fs::path& scene_path, const Scene& scene,
                         const std::optional<fs::path>& checkpoint) {
  return load_checkpoint(checkpoint ? *checkpoint
                                    : scene_root(scene_path) / scene.manifest.initial_checkpoint);
}

// ---- gen-scene ----

struct GenArgs {
  std::string kind = "textured_room";
  GeneratorParams gen;
  InitSpec init;
  std::string strategy = "gt_surface_noisy";
  fs::path out;
};

void add_gen_scene(CLI::App& app, GenArgs& a) {
  app.add_option("--kind", a.kind, "Scene kind")
      ->check(CLI::IsMember({"textured_room", "plane", "box"}))
      ->capture_default_str();
  app.add_option("--seed", a.gen.seed, "Generator and initialization seed")->capture_default_str();
  app.add_option("--views", a.gen.n_views, "Training views")->capture_default_str();
  app.add_option("--test-views", a.gen.n_test_views, "Held-out views")->capture_default_str();
  app.add_option("--width", a.gen.width, "Image width")->capture_default_str();
  app.add_option("--height", a.gen.height, "Image height")->capture_default_str();
  app.add_option("--fov", a.gen.fov_deg, "Horizontal field of view in degrees")->capture_default_str();
  app.add_option("--points", a.init.n_points, "Surface Gaussians")->capture_default_str();
  app.add_option("--sigma-pos", a.init.sigma_pos, "Std of the initial position noise")
      ->capture_default_str();
  app.add_option("--init-opacity", a.init.opacity, "Initial surface opacity")->capture_default_str();
  app.add_option("--init-scale", a.init.scale_factor, "Splat size relative to sample spacing")
      ->capture_default_str();
  app.add_option("--init-strategy", a.strategy, "Initialization strategy")
      ->check(CLI::IsMember({"gt_surface_noisy", "random_box"}))
      ->capture_default_str();
  app.add_option("--floaters", a.init.floaters.count, "Floaters appended to the cloud")
      ->capture_default_str();
  app.add_option("--out", a.out, "Scene directory")->required();
}

int run_gen_scene(GenArgs a) {
  a.gen.kind = parse_scene_kind(a.kind);
  a.init.strategy = parse_init_strategy(a.strategy);
  a.init.seed = a.gen.seed;
  const Scene scene = generate_scene(a.gen, a.init);
  const GaussianCloud cloud = init_cloud(scene, a.init);
  save_scene(scene, a.out);
  save_checkpoint(cloud, a.out / scene.manifest.initial_checkpoint);
  std::cout << "wrote " << scene.manifest.views.size() << " views and " << cloud.size()
            << " Gaussians to " << a.out.string() << "\n";
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::optional<fs::path> config;
  std::optional<fs::path> scene, out, init;
  std::optional<std::uint64_t> seed, sampler_seed;
  std::optional<int> iters, fds_start, batch, eval_every, checkpoint_every;
  std::optional<std::string> fds, sampler, oracle;
  std::optional<double> lambda_fds, lambda_dssim, sigma;
  bool occlusion_aware = false;
  bool quiet = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--config", a.config, "JSON run configuration (flags take precedence)");
  app.add_option("--scene", a.scene, "Scene directory");
  app.add_option("--out", a.out, "Run directory");
  app.add_option("--init", a.init, "Initial checkpoint (default: the scene's)");
  app.add_option("--seed", a.seed, "Run seed");
  app.add_option("--iters", a.iters, "Total iterations");
  app.add_option("--fds-start", a.fds_start, "First iteration with the flow term");
  app.add_option("--batch", a.batch, "Views per step");
  app.add_option("--fds", a.fds, "Enable the flow term (off sets lambda_fds to 0)")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--lambda-fds", a.lambda_fds, "Flow term weight");
  app.add_option("--lambda-dssim", a.lambda_dssim, "D-SSIM weight in the photometric loss");
  app.add_option("--sigma", a.sigma, "Target mean flow magnitude in pixels");
  app.add_option("--sampler", a.sampler, "random | fixed:<xi>");
  app.add_option("--sampler-seed", a.sampler_seed, "Camera sampling seed (default: run seed)");
  app.add_option("--oracle", a.oracle, "ground_truth | noisy:<sigma_n> | file:<pattern>");
  app.add_flag("--occlusion-aware", a.occlusion_aware, "Drop prior-flow pixels hidden in the sampled view");
  app.add_option("--eval-every", a.eval_every, "Metrics row cadence");
  app.add_option("--checkpoint-every", a.checkpoint_every, "Checkpoint cadence (0 disables)");
  app.add_flag("--quiet", a.quiet, "Do not echo metrics rows");
}

RunConfig resolve_train_config(const TrainArgs& a) {
  RunConfig cfg;
  if (a.config) {
    try {
      cfg = load_run_config(*a.config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::FileNotFound) throw;
      fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
    }
  }
  if (a.scene) cfg.scene = *a.scene;
  if (a.out) cfg.out = *a.out;
  if (a.init) cfg.init = *a.init;
  if (a.seed) cfg.seed = *a.seed;
  if (a.sampler_seed) cfg.sampler_seed = *a.sampler_seed;
  TrainSchedule& s = cfg.train.schedule;
  if (a.iters) s.total_iters = *a.iters;
  if (a.fds_start) s.fds_start_iter = *a.fds_start;
  if (a.batch) s.batch = *a.batch;
  if (a.eval_every) s.eval_every = *a.eval_every;
  if (a.checkpoint_every) s.checkpoint_every = *a.checkpoint_every;
  if (a.iters && !a.fds_start && !a.config) s.fds_start_iter = *a.iters / 3;
  if (a.lambda_fds) cfg.train.weights.lambda_fds = *a.lambda_fds;
  if (a.lambda_dssim) cfg.train.weights.lambda_dssim = *a.lambda_dssim;
  if (a.fds == std::string("off")) cfg.train.weights.lambda_fds = 0.0;
  if (a.fds == std::string("on") && cfg.train.weights.lambda_fds == 0.0)
    fail(ErrorCode::InvalidArgument, "--fds on with lambda_fds = 0");
  if (a.sigma) cfg.train.sampler.sigma = *a.sigma;
  if (a.sampler) parse_sampler_mode(*a.sampler, cfg.train.sampler);
  if (a.oracle) parse_oracle_spec(*a.oracle, cfg.train.oracle);
  if (a.occlusion_aware) cfg.train.oracle.occlusion_aware = true;
  cfg.validate();
  return cfg;
}

int run_train(const TrainArgs& a) {
  const RunConfig cfg = resolve_train_config(a);
  const Scene scene = load_scene(cfg.scene);
  GaussianCloud init = load_cloud(cfg.scene, scene, cfg.init);
  make_dir(cfg.out);
  write_text(cfg.out / "config.json", run_config_to_json(cfg));
  if (!a.quiet) std::cout << kMetricsHeader << "\n";
  const TrainResult result = train(scene, std::move(init), cfg.resolved(), cfg.out, [&](const MetricsRow& r) {
    if (!a.quiet) std::cout << r.to_csv() << "\n" << std::flush;
  });
  if (result.fds_empty_views > 0)
    std::cerr << "warning: " << result.fds_empty_views
              << " flow terms had no valid pixel and contributed nothing\n";
  return kExitOk;
}

// ---- eval ----

struct EvalArgs {
  fs::path checkpoint, scene, out;
  std::string split = "test";
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "Checkpoint to evaluate")->required();
  app.add_option("--scene", a.scene, "Scene directory")->required();
  app.add_option("--split", a.split, "train | test | all")->capture_default_str();
  app.add_option("--out", a.out, "Report directory")->required();
}

int run_eval(const EvalArgs& a) {
  if (a.split != "train" && a.split != "test" && a.split != "all")
    fail(ErrorCode::InvalidArgument, "unknown split '" + a.split + "' (expected train, test or all)");
  const Scene scene = load_scene(a.scene);
  const GaussianCloud cloud = load_checkpoint(a.checkpoint);
  std::vector<RenderOutput> renders;
  const EvalReport report = evaluate_split(scene, cloud, a.split, &renders);
  make_dir(a.out / "renders");
  write_text(a.out / "eval.csv", report.to_csv());
  write_text(a.out / "eval.json", report.to_json());
  const auto ids = split_views(scene, a.split);
  const double far = scene.manifest.far;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const int v = ids[k];
    const RenderOutput& r = renders[k];
    const std::string base = (a.out / "renders" / view_name(scene.manifest.views[v].id)).string();
    write_ppm(r.color, base + "_color.ppm");
    write_pfm(r.depth, base + "_depth.pfm");
    write_ppm(colorize_turbo(r.depth, far), base + "_depth.ppm");
    const Image mask = depth_eval_mask(scene.gt_depth[v], r.alpha_acc);
    Image err(r.depth.width(), r.depth.height(), 1);
    for (std::size_t i = 0; i < err.data().size(); ++i)
      if (mask.data()[i] != 0.0)
        err.data()[i] = std::abs(r.depth.data()[i] - scene.gt_depth[v].data()[i]) /
                        scene.gt_depth[v].data()[i];
    write_pfm(err, base + "_abs_rel.pfm");
    write_ppm(colorize_turbo(err, 0.2, &mask), base + "_abs_rel.ppm");
  }
  std::cout << "split " << a.split << ": abs_rel " << report.mean_abs_rel << " psnr "
            << report.mean_psnr << " ssim " << report.mean_ssim << "\n";
  return kExitOk;
}

// ---- errormap ----

struct ErrorMapArgs {
  fs::path checkpoint, scene, out;
  std::optional<int> view;
  int samples = 8;
  double sigma = 23.0;
  std::string sampler = "random";
  std::string oracle = "noisy:0.5";
  bool occlusion_aware = false;
  std::uint64_t seed = 0;
};

void add_errormap(CLI::App& app, ErrorMapArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "Checkpoint to analyse")->required();
  app.add_option("--scene", a.scene, "Scene directory")->required();
  app.add_option("--view", a.view, "View id (default: every training view)");
  app.add_option("--samples", a.samples, "Sampled views per input view")->capture_default_str();
  app.add_option("--sigma", a.sigma, "Target mean flow magnitude in pixels")->capture_default_str();
  app.add_option("--sampler", a.sampler, "random | fixed:<xi>")->capture_default_str();
  app.add_option("--oracle", a.oracle, "ground_truth | noisy:<sigma_n> | file:<pattern>")
      ->capture_default_str();
  app.add_flag("--occlusion-aware", a.occlusion_aware, "Drop prior-flow pixels hidden in the sampled view");
  app.add_option("--seed", a.seed, "Sampling and oracle-noise seed")->capture_default_str();
  app.add_option("--out", a.out, "Output directory")->required();
}

int run_errormap(const ErrorMapArgs& a) {
  ErrorMapConfig cfg;
  cfg.samples = a.samples;
  cfg.sampler.sigma = a.sigma;
  parse_sampler_mode(a.sampler, cfg.sampler);
  parse_oracle_spec(a.oracle, cfg.oracle);
  cfg.oracle.occlusion_aware = a.occlusion_aware;
  cfg.seed = a.seed;
  cfg.sampler.rng_seed = a.seed;
  cfg.sampler.validate();
  if (a.samples < 1) fail(ErrorCode::InvalidArgument, "--samples must be at least 1");

  const Scene scene = load_scene(a.scene);
  if (scene.gt_depth.size() != scene.manifest.views.size())
    fail(ErrorCode::MissingGroundTruth, "scene has no ground-truth depth");
  const GaussianCloud cloud = load_checkpoint(a.checkpoint);
  std::vector<int> indices;
  if (a.view) {
    for (std::size_t i = 0; i < scene.manifest.views.size(); ++i)
      if (scene.manifest.views[i].id == *a.view) indices.push_back(static_cast<int>(i));
    if (indices.empty()) fail(ErrorCode::InvalidArgument, "no view with id " + std::to_string(*a.view));
  } else {
    indices = scene.train_views();
  }

  make_dir(a.out);
  std::ostringstream csv;
  csv.precision(17);
  csv << "view,samples,radiance_epe,prior_epe,radiance_pixels,prior_pixels\n";
  double r_sum = 0.0, p_sum = 0.0;
  std::size_t r_n = 0, p_n = 0;
  for (int idx : indices) {
    const ErrorMap m = error_map(scene, cloud, idx, cfg);
    const std::string base = (a.out / ("view_" + view_name(m.view_id))).string();
    const double vmax = std::max(1.0, 4.0 * m.prior_mean);
    write_pfm(m.radiance_epe, base + "_radiance_epe.pfm");
    write_pfm(m.prior_epe, base + "_prior_epe.pfm");
    write_ppm(colorize_turbo(m.radiance_epe, vmax, &m.radiance_count), base + "_radiance_epe.ppm");
    write_ppm(colorize_turbo(m.prior_epe, vmax, &m.prior_count), base + "_prior_epe.ppm");
    csv << m.view_id << "," << cfg.samples << "," << m.radiance_mean << "," << m.prior_mean << ","
        << m.radiance_pixels << "," << m.prior_pixels << "\n";
    r_sum += m.radiance_mean * m.radiance_pixels;
    p_sum += m.prior_mean * m.prior_pixels;
    r_n += m.radiance_pixels;
    p_n += m.prior_pixels;
  }
  csv << "mean," << cfg.samples << "," << r_sum / r_n << "," << p_sum / p_n << "," << r_n << ","
      << p_n << "\n";
  write_text(a.out / "errormap.csv", csv.str());
  std::cout << "radiance-flow EPE " << r_sum / r_n << " px, prior-flow EPE " << p_sum / p_n
            << " px over " << indices.size() << " view(s)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow distillation sampling on a miniature Gaussian splatting renderer", "fds"};
  app.require_subcommand(1);

  GenArgs gen;
  TrainArgs tr;
  EvalArgs ev;
  ErrorMapArgs em;
  add_gen_scene(*app.add_subcommand("gen-scene", "Generate a synthetic scene and its initial cloud"), gen);
  add_train(*app.add_subcommand("train", "Train a cloud on a scene"), tr);
  add_eval(*app.add_subcommand("eval", "Evaluate a checkpoint on a split"), ev);
  add_errormap(*app.add_subcommand("errormap", "Radiance-flow vs prior-flow error maps"), em);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("gen-scene")) return run_gen_scene(gen);
    if (app.got_subcommand("train")) return run_train(tr);
    if (app.got_subcommand("eval")) return run_eval(ev);
    return run_errormap(em);
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error("Io", e.what());
    return kExitIo;
  }
}
