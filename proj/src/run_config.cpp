// SPDX-License-Identifier: Apache-2.0
#include "fds/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fds/common.hpp"
#include "json_reader.hpp"

namespace fds {
namespace {

using detail::json;
using detail::Reader;
using detail::with_path;

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    fail(ErrorCode::InvalidArgument, what + ": '" + text + "' is not a number");
  return v;
}

int int_field(const Reader& r, const char* key) {
  const std::int64_t v = r.integer(key);
  if (v < INT32_MIN || v > INT32_MAX) fail(ErrorCode::Validation, r.sub(key) + ": out of range");
  return static_cast<int>(v);
}

std::string format_xi(double xi) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", xi);
  return buf;
}

}  // namespace

std::string sampler_mode_string(const SamplerConfig& cfg) {
  return cfg.fixed_xi ? "fixed:" + format_xi(*cfg.fixed_xi) : "random";
}

void parse_sampler_mode(const std::string& text, SamplerConfig& cfg) {
  if (text == "random") {
    cfg.fixed_xi.reset();
    return;
  }
  if (text.rfind("fixed:", 0) == 0) {
    const double xi = parse_number(text.substr(6), "sampler mode");
    if (!(xi >= 0.0 && xi < 1.0)) fail(ErrorCode::InvalidArgument, "fixed xi must lie in [0, 1)");
    cfg.fixed_xi = xi;
    return;
  }
  fail(ErrorCode::InvalidArgument, "sampler mode must be 'random' or 'fixed:<xi>', got '" + text + "'");
}

void parse_oracle_spec(const std::string& text, OracleConfig& cfg) {
  if (text == "ground_truth") {
    cfg.kind = OracleKind::GroundTruth;
    cfg.sigma_n = 0.0;
  } else if (text.rfind("noisy:", 0) == 0) {
    cfg.kind = OracleKind::Noisy;
    cfg.sigma_n = parse_number(text.substr(6), "oracle noise");
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    cfg.kind = OracleKind::File;
    cfg.pattern = text.substr(5);
  } else {
    fail(ErrorCode::InvalidArgument,
         "oracle must be 'ground_truth', 'noisy:<sigma>' or 'file:<pattern>', got '" + text + "'");
  }
  cfg.validate();
}

TrainConfig RunConfig::resolved() const {
  TrainConfig t = train;
  t.seed = seed;
  t.sampler.rng_seed = sampler_seed.value_or(seed);
  return t;
}

void RunConfig::validate() const {
  if (scene.empty()) fail(ErrorCode::InvalidArgument, "no scene given");
  if (out.empty()) fail(ErrorCode::InvalidArgument, "no output directory given");
  resolved().validate();
}

RunConfig run_config_from_json(const std::string& text, RunConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Validation, std::string("run config is not valid JSON: ") + e.what());
  }
  const Reader root(j, "");
  root.only({"scene", "out", "init", "seed", "schedule", "weights", "sampler", "oracle"});
  if (root.has("scene")) cfg.scene = root.string("scene");
  if (root.has("out")) cfg.out = root.string("out");
  if (root.has("init")) cfg.init = root.string("init");
  if (root.has("seed")) cfg.seed = root.unsigned_integer("seed");

  if (root.has("schedule")) {
    const Reader s(root.at("schedule"), "schedule");
    s.only({"total_iters", "fds_start_iter", "batch", "eval_every", "checkpoint_every", "lr"});
    TrainSchedule& t = cfg.train.schedule;
    if (s.has("total_iters")) t.total_iters = int_field(s, "total_iters");
    if (s.has("fds_start_iter")) t.fds_start_iter = int_field(s, "fds_start_iter");
    if (s.has("batch")) t.batch = int_field(s, "batch");
    if (s.has("eval_every")) t.eval_every = int_field(s, "eval_every");
    if (s.has("checkpoint_every")) t.checkpoint_every = int_field(s, "checkpoint_every");
    if (s.has("lr")) {
      const Reader l(s.at("lr"), "schedule.lr");
      l.only({"position_init", "position_final", "scale", "rotation", "opacity", "color"});
      LearningRates& lr = t.lr;
      if (l.has("position_init")) lr.position_init = l.number("position_init");
      if (l.has("position_final")) lr.position_final = l.number("position_final");
      if (l.has("scale")) lr.scale = l.number("scale");
      if (l.has("rotation")) lr.rotation = l.number("rotation");
      if (l.has("opacity")) lr.opacity = l.number("opacity");
      if (l.has("color")) lr.color = l.number("color");
    }
  }
  if (root.has("weights")) {
    const Reader w(root.at("weights"), "weights");
    w.only({"lambda_dssim", "lambda_normal", "lambda_fds"});
    LossWeights& lw = cfg.train.weights;
    if (w.has("lambda_dssim")) lw.lambda_dssim = w.number("lambda_dssim");
    if (w.has("lambda_normal")) lw.lambda_normal = w.number("lambda_normal");
    if (w.has("lambda_fds")) lw.lambda_fds = w.number("lambda_fds");
  }
  if (root.has("sampler")) {
    const Reader s(root.at("sampler"), "sampler");
    s.only({"sigma", "mode", "seed"});
    if (s.has("sigma")) cfg.train.sampler.sigma = s.number("sigma");
    if (s.has("mode"))
      with_path("sampler.mode", [&] { parse_sampler_mode(s.string("mode"), cfg.train.sampler); });
    if (s.has("seed")) cfg.sampler_seed = s.unsigned_integer("seed");
  }
  if (root.has("oracle")) {
    const Reader o(root.at("oracle"), "oracle");
    o.only({"kind", "sigma_n", "pattern", "occlusion_aware"});
    OracleConfig& oc = cfg.train.oracle;
    if (o.has("kind")) with_path("oracle.kind", [&] { oc.kind = parse_oracle_kind(o.string("kind")); });
    if (o.has("sigma_n")) oc.sigma_n = o.number("sigma_n");
    if (o.has("pattern")) oc.pattern = o.string("pattern");
    if (o.has("occlusion_aware")) oc.occlusion_aware = o.boolean("occlusion_aware");
  }
  with_path("schedule", [&] { cfg.train.schedule.validate(); });
  with_path("weights", [&] { cfg.train.weights.validate(); });
  with_path("sampler", [&] { cfg.train.sampler.validate(); });
  with_path("oracle", [&] { cfg.train.oracle.validate(); });
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::FileNotFound, "cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return run_config_from_json(text.str(), std::move(base));
}

std::string run_config_to_json(const RunConfig& cfg) {
  const TrainConfig t = cfg.resolved();
  const LearningRates& lr = t.schedule.lr;
  json j;
  j["scene"] = cfg.scene.string();
  j["out"] = cfg.out.string();
  if (cfg.init) j["init"] = cfg.init->string();
  j["seed"] = cfg.seed;
  j["schedule"] = {{"total_iters", t.schedule.total_iters},
                   {"fds_start_iter", t.schedule.fds_start_iter},
                   {"batch", t.schedule.batch},
                   {"eval_every", t.schedule.eval_every},
                   {"checkpoint_every", t.schedule.checkpoint_every},
                   {"lr",
                    {{"position_init", lr.position_init},
                     {"position_final", lr.position_final},
                     {"scale", lr.scale},
                     {"rotation", lr.rotation},
                     {"opacity", lr.opacity},
                     {"color", lr.color}}}};
  j["weights"] = {{"lambda_dssim", t.weights.lambda_dssim},
                  {"lambda_normal", t.weights.lambda_normal},
                  {"lambda_fds", t.weights.lambda_fds}};
  j["sampler"] = {{"sigma", t.sampler.sigma},
                  {"mode", sampler_mode_string(t.sampler)},
                  {"seed", t.sampler.rng_seed}};
  j["oracle"] = {{"kind", to_string(t.oracle.kind)},
                 {"sigma_n", t.oracle.sigma_n},
                 {"pattern", t.oracle.pattern},
                 {"occlusion_aware", t.oracle.occlusion_aware}};
  return j.dump(2) + "\n";
}

}  // namespace fds
