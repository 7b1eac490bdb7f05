// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "fds/common.hpp"
#include "fds/flow.hpp"
#include "fds/losses.hpp"
#include "fds/run_config.hpp"
#include "fds/trainer.hpp"
#include "test_support.hpp"

using namespace fds;
using namespace fds::test;

namespace {

struct Fixture {
  Scene scene;
  GaussianCloud init;
};

Fixture small_fixture(std::uint64_t seed = 5) {
  GeneratorParams p;
  p.seed = seed;
  p.n_views = 6;
  p.n_test_views = 2;
  p.width = 32;
  p.height = 32;
  InitSpec spec;
  spec.seed = seed;
  spec.n_points = 200;
  spec.floaters.count = 5;
  Fixture f;
  f.scene = generate_scene(p, spec);
  f.init = init_cloud(f.scene, spec);
  return f;
}

TrainConfig small_config(int iters, int fds_start) {
  TrainConfig cfg;
  cfg.schedule.total_iters = iters;
  cfg.schedule.fds_start_iter = fds_start;
  cfg.schedule.eval_every = 5;
  cfg.oracle.kind = OracleKind::Noisy;
  cfg.oracle.sigma_n = 0.5;
  cfg.seed = 11;
  cfg.sampler.rng_seed = 11;
  return cfg;
}

GaussianCloud run_steps(const Fixture& f, const TrainConfig& cfg, int steps) {
  GaussianCloud cloud = f.init;
  Adam adam(cloud.size(), cfg.schedule.lr);
  for (int i = 0; i < steps; ++i) train_step(cloud, adam, f.scene, cfg, i);
  return cloud;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("iterations before the flow term starts match photometric-only training") {
  const Fixture f = small_fixture();
  const TrainConfig with_fds = small_config(12, 6);
  TrainConfig baseline = with_fds;
  baseline.weights.lambda_fds = 0.0;
  const GaussianCloud a = run_steps(f, with_fds, 6);
  const GaussianCloud b = run_steps(f, baseline, 6);
  CHECK(a == b);
  // One more step with the term active moves the trajectories apart.
  CHECK(run_steps(f, with_fds, 7) != run_steps(f, baseline, 7));
}

TEST_CASE("zero flow weight reproduces the baseline trajectory bit for bit") {
  const Fixture f = small_fixture();
  TrainConfig zero = small_config(12, 0);
  zero.weights.lambda_fds = 0.0;
  TrainConfig never = small_config(12, 12);
  const GaussianCloud a = run_steps(f, zero, 12);
  const GaussianCloud b = run_steps(f, never, 12);
  CHECK(a == b);

  GaussianCloud cloud = f.init;
  Adam adam(cloud.size(), zero.schedule.lr);
  const StepReport r = train_step(cloud, adam, f.scene, zero, 0);
  REQUIRE(r.loss_fds.has_value());
  CHECK(*r.loss_fds > 0.0);
  CHECK(r.eps_t > 0.0);
  CHECK(r.loss_total == doctest::Approx(r.loss_l1 * 0.8 + r.loss_dssim * 0.2).epsilon(1e-12));
}

TEST_CASE("a flow step pulls a single Gaussian toward the prior's depth") {
  const Camera cam = make_camera(16, 16, 20.0);
  GaussianCloud cloud;
  GaussianPoint g;
  g.mu = Vec3(0.0, 0.0, 3.0);
  g.log_scale = Vec3::Constant(std::log(0.6));
  g.opacity_logit = logit(0.95);
  cloud.add(g);
  const double true_depth = 2.0;
  const Vec3 t(0.1, 0.05, 0.0);
  const Camera sampled = translate_camera(cam, t);
  const FdsTerm term{sampled, pure_translation_flow(Image(16, 16, 1, true_depth), cam, t)};
  const RenderSettings settings{10.0};
  const Image gt = render_forward(cloud, cam, settings).color;

  LossWeights w;
  w.lambda_dssim = 0.0;
  w.lambda_fds = 1.0;
  LearningRates lr;
  lr.position_init = lr.position_final = 1e-2;
  Adam adam(1, lr);
  double prev_err = cloud[0].mu.z() - true_depth;
  double prev_loss = 1e300;
  for (int step = 0; step < 10; ++step) {
    cloud.zero_grad();
    const RenderOutput r = render_forward(cloud, cam, settings);
    const ViewLoss vl = view_loss_and_grad(cloud, cam, r, gt, w, &term, 1.0);
    REQUIRE(vl.fds.has_value());
    CHECK(*vl.fds < prev_loss);
    prev_loss = *vl.fds;
    CHECK(cloud.grads()[0].mu.z() > 0.0);
    adam.step(cloud, step, 10);
    const double err = cloud[0].mu.z() - true_depth;
    CHECK(err < prev_err);
    CHECK(err > 0.0);
    prev_err = err;
  }
}

TEST_CASE("total loss gradient matches finite differences end to end") {
  const Camera cam = make_camera(32, 32, 30.0);
  const Vec3 t(0.12, -0.05, 0.0);
  const Camera sampled = translate_camera(cam, t);
  LossWeights w;
  w.lambda_fds = 0.5;
  const RenderSettings settings{20.0};
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t fixture = 0; fixture < 3; ++fixture) {
    Philox rng(derive_key(99, {fixture}), 0);
    GaussianCloud cloud = random_cloud(rng, 30, cam);
    const Image gt = random_image(rng, 32, 32, 3, 0.0, 1.0);
    FlowField prior = pure_translation_flow(Image(32, 32, 1, 3.5), cam, t);
    for (std::size_t i = 0; i < prior.size(); ++i) {
      prior.du[i] += 0.3 * rng.normal();
      prior.dv[i] += 0.3 * rng.normal();
    }
    const FdsTerm term{sampled, prior};

    auto evaluate = [&](RenderOutput* keep) {
      RenderOutput r = render_forward(cloud, cam, settings);
      Image mask(32, 32, 1);
      for (std::size_t i = 0; i < mask.data().size(); ++i)
        mask.data()[i] = r.alpha_acc.data()[i] > kAccumulatedAlphaMin;
      const FlowField radiance = radiance_flow(r.depth, cam, sampled, &mask);
      const double loss = photometric_loss(r.color, gt, w.lambda_dssim).total +
                          w.lambda_fds * fds_loss(prior, radiance).loss;
      if (keep) *keep = std::move(r);
      return std::pair{loss, radiance.valid};
    };
    auto loss = [&] { return evaluate(nullptr).first; };
    auto signature = [&] {
      RenderOutput r;
      const auto valid = evaluate(&r).second;
      std::uint64_t h = r.structure_signature();
      for (std::uint8_t v : valid) h = splitmix64(h ^ v);
      for (std::size_t i = 0; i < gt.data().size(); ++i)
        h = splitmix64(h ^ static_cast<std::uint64_t>(r.color.data()[i] > gt.data()[i]));
      return h;
    };

    cloud.zero_grad();
    const RenderOutput base = render_forward(cloud, cam, settings);
    view_loss_and_grad(cloud, cam, base, gt, w, &term, 1.0);
    const std::vector<GaussianPoint> analytic(cloud.grads().begin(), cloud.grads().end());
    const FdStats stats = check_gradient(cloud, loss, signature, analytic, 1e-4, 1e-6);
    INFO("fixture " << fixture << " checked " << stats.checked << " skipped " << stats.skipped);
    CHECK(stats.checked > 300);
    worst = std::max(worst, stats.max_rel);
    checked += stats.checked;
  }
  MESSAGE("end-to-end max relative error " << worst << " over " << checked << " parameters");
  CHECK(worst < 1e-2);
}

TEST_CASE("zero iterations return the initialization unchanged") {
  const Fixture f = small_fixture();
  TrainConfig cfg = small_config(0, 0);
  const TrainResult r = train(f.scene, f.init, cfg);
  CHECK(r.cloud == f.init);
  REQUIRE(r.trace.size() == 1);
  CHECK(r.trace[0].iter == 0);
  CHECK_FALSE(r.trace[0].loss_total.has_value());
}

TEST_CASE("training writes a reproducible trace and checkpoints") {
  const Fixture f = small_fixture();
  TrainConfig cfg = small_config(12, 5);
  cfg.schedule.checkpoint_every = 6;
  const auto d1 = temp_dir("train_a");
  const auto d2 = temp_dir("train_b");
  const TrainResult a = train(f.scene, f.init, cfg, d1);
  train(f.scene, f.init, cfg, d2);
  const std::string csv = slurp(d1 / "metrics.csv");
  CHECK(csv == slurp(d2 / "metrics.csv"));
  CHECK(slurp(d1 / "final.fdsgc") == slurp(d2 / "final.fdsgc"));
  CHECK(csv.rfind(std::string(kMetricsHeader) + "\n", 0) == 0);
  CHECK(std::filesystem::exists(d1 / "ckpt_000006.fdsgc"));
  CHECK(std::filesystem::exists(d1 / "ckpt_000012.fdsgc"));
  CHECK(load_checkpoint(d1 / "final.fdsgc") == decode_checkpoint(encode_checkpoint(a.cloud)));
  REQUIRE(a.trace.size() == 4);  // 0, 5, 10, 12
  CHECK(a.trace[1].iter == 5);
  CHECK(a.trace[3].iter == 12);
  CHECK_FALSE(a.trace[1].loss_fds.has_value());  // steps 0..4 precede the flow term
  CHECK(a.trace[2].loss_fds.has_value());
  CHECK(a.trace[2].eps_t.has_value());

  cfg.sampler.rng_seed = 12;
  const TrainResult c = train(f.scene, f.init, cfg);
  CHECK(c.cloud != a.cloud);
}

TEST_CASE("training reports divergence") {
  const Fixture f = small_fixture();
  TrainConfig cfg = small_config(5, 5);
  GaussianCloud broken = f.init;
  for (GaussianPoint& g : broken.points()) g.color_logit.x() = std::nan("");
  const auto dir = temp_dir("diverge");
  try {
    train(f.scene, broken, cfg, dir);
    FAIL("expected NumericalFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericalFailure);
  }
  CHECK(std::filesystem::exists(dir / "diverged.json"));
}

TEST_CASE("evaluation covers the requested split") {
  const Fixture f = small_fixture();
  const EvalReport test = evaluate_split(f.scene, f.init, "test");
  CHECK(test.views.size() == 2);
  CHECK(evaluate_split(f.scene, f.init, "all").views.size() == 8);
  CHECK(test.mean_abs_rel > 0.0);
  CHECK_THROWS_AS(evaluate_split(f.scene, f.init, "validation"), Error);
  CHECK(evaluate_split(f.scene, f.init, "test").to_csv() == test.to_csv());
}

TEST_CASE("error maps") {
  const Fixture f = small_fixture();
  const int v = f.scene.train_views()[1];
  ErrorMapConfig cfg;
  cfg.samples = 4;
  cfg.seed = 3;
  const ErrorMap exact = error_map(f.scene, f.init, v, cfg);
  CHECK(exact.prior_mean == 0.0);
  for (double e : exact.prior_epe.data()) CHECK(e == 0.0);
  CHECK(exact.radiance_mean > 0.0);

  // The K-sample map is the per-pixel mean of the single-sample maps.
  cfg.oracle.kind = OracleKind::Noisy;
  cfg.oracle.sigma_n = 0.5;
  const ErrorMap all = error_map(f.scene, f.init, v, cfg);
  Image sum(32, 32, 1), count(32, 32, 1);
  double pooled = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < 4; ++k) {
    ErrorMapConfig one = cfg;
    one.samples = 1;
    one.first_sample = k;
    const ErrorMap m = error_map(f.scene, f.init, v, one);
    for (std::size_t i = 0; i < sum.data().size(); ++i) {
      sum.data()[i] += m.radiance_epe.data()[i] * m.radiance_count.data()[i];
      count.data()[i] += m.radiance_count.data()[i];
    }
    pooled += m.prior_mean * m.prior_pixels;
    n += m.prior_pixels;
  }
  for (std::size_t i = 0; i < sum.data().size(); ++i) {
    CHECK(count.data()[i] == all.radiance_count.data()[i]);
    if (count.data()[i] > 0)
      CHECK(all.radiance_epe.data()[i] == doctest::Approx(sum.data()[i] / count.data()[i]).epsilon(1e-12));
  }
  CHECK(all.prior_mean == doctest::Approx(pooled / n).epsilon(1e-12));
  CHECK(all.prior_mean == doctest::Approx(0.5 * std::sqrt(std::acos(-1.0) / 2.0)).epsilon(0.1));

  Scene no_gt = f.scene;
  no_gt.gt_depth.clear();
  try {
    error_map(no_gt, f.init, v, cfg);
    FAIL("expected MissingGroundTruth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingGroundTruth);
  }
}

TEST_CASE("run configs overlay, validate and round-trip") {
  RunConfig base;
  base.scene = "s";
  base.out = "o";
  const RunConfig cfg = run_config_from_json(R"({
      "seed": 4,
      "schedule": {"total_iters": 90, "fds_start_iter": 30, "lr": {"opacity": 0.05}},
      "weights": {"lambda_fds": 0.02},
      "sampler": {"sigma": 12, "mode": "fixed:0.25"},
      "oracle": {"kind": "noisy", "sigma_n": 0.5}})",
                                             base);
  CHECK(cfg.scene == "s");
  CHECK(cfg.train.schedule.total_iters == 90);
  CHECK(cfg.train.schedule.lr.opacity == 0.05);
  CHECK(cfg.train.schedule.lr.color == LearningRates{}.color);
  CHECK(cfg.train.sampler.fixed_xi == 0.25);
  CHECK(cfg.resolved().sampler.rng_seed == 4);
  CHECK(cfg.resolved().seed == 4);

  const std::string snapshot = run_config_to_json(cfg);
  CHECK(run_config_to_json(run_config_from_json(snapshot)) == snapshot);

  auto error_path = [](const std::string& text) {
    try {
      run_config_from_json(text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Validation);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_path(R"({"schedule": {"iters": 5}})").find("schedule.iters: unknown key") != std::string::npos);
  CHECK(error_path(R"({"bogus": 1})").find("bogus: unknown key") != std::string::npos);
  CHECK(error_path(R"({"sampler": {"mode": "spiral"}})").find("sampler.mode") != std::string::npos);
  CHECK(error_path(R"({"schedule": {"total_iters": 10, "fds_start_iter": 20}})").find("schedule") !=
        std::string::npos);
  CHECK(error_path(R"({"weights": {"lambda_fds": "x"}})").find("weights.lambda_fds") != std::string::npos);
  CHECK(error_path("{").find("not valid JSON") != std::string::npos);

  SamplerConfig s;
  parse_sampler_mode("fixed:0", s);
  CHECK(sampler_mode_string(s) == "fixed:0");
  parse_sampler_mode("random", s);
  CHECK_FALSE(s.is_fixed());
  CHECK_THROWS_AS(parse_sampler_mode("fixed:1.5", s), Error);
  OracleConfig o;
  parse_oracle_spec("noisy:0.25", o);
  CHECK(o.kind == OracleKind::Noisy);
  CHECK(o.sigma_n == 0.25);
  CHECK_THROWS_AS(parse_oracle_spec("noisy:abc", o), Error);
  CHECK_THROWS_AS(parse_oracle_spec("raft", o), Error);
}
