#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dfv/costmodel/cost.hpp"
#include "dfv/editengine/edit.hpp"
#include "dfv/evalmetrics/metrics.hpp"
#include "dfv/flowcore/sampler.hpp"
#include "dfv/numcore/dfvt.hpp"
#include "dfv/numcore/error.hpp"
#include "dfv/toymodels/analytic.hpp"
#include "dfv/toymodels/codec.hpp"
#include "dfv/toymodels/dataset.hpp"
#include "dfv/toymodels/toydit.hpp"
#include "io.hpp"

namespace dfv::cli {

namespace fs = std::filesystem;
using flow::ConditionId;

namespace {

// Loaded model with everything the commands need to drive it.
struct Model {
  std::unique_ptr<toy::ToyDiT> dit;
  std::unique_ptr<toy::AnalyticGaussianModel> analytic;
  flow::Schedule sched;
  toy::CodecKind codec = toy::CodecKind::Identity;

  flow::VelocityProvider& provider() {
    if (dit) return *dit;
    return *analytic;
  }
};

std::uint64_t seed_of(const Config& cfg) { return cfg.u64("seed"); }

fs::path out_dir(const Config& cfg, const RunOptions& opt) {
  fs::path dir = opt.out.empty() ? cfg.path("output.dir") : opt.out;
  fs::create_directories(dir);
  return dir;
}

flow::ScheduleParams schedule_params(const Config& cfg, flow::Family fallback_family, double fallback_horizon) {
  flow::ScheduleParams p;
  p.family = fallback_family;
  if (cfg.has("schedule.family")) {
    try {
      p.family = flow::parse_family(cfg.str("schedule.family"));
    } catch (const Error& e) {
      cfg.error("schedule.family", e.what());
    }
  }
  p.beta_min = cfg.real("schedule.beta_min", p.beta_min);
  p.beta_max = cfg.real("schedule.beta_max", p.beta_max);
  p.horizon = cfg.real("schedule.horizon", fallback_horizon);
  const auto steps = cfg.integer("schedule.steps", p.steps);
  if (steps < 1 || steps > 1000000) cfg.error("schedule.steps", "must be in [1, 1000000]");
  p.steps = static_cast<int>(steps);
  return p;
}

toy::CodecKind codec_of(const Config& cfg) {
  try {
    return toy::parse_codec(cfg.str("model.codec", "identity"));
  } catch (const Error& e) {
    cfg.error("model.codec", e.what());
  }
}

toy::ClipGeometry pixel_geometry(const Config& cfg) {
  toy::ClipGeometry g;
  auto extent = [&](const char* key, std::size_t& v) {
    const auto x = cfg.integer(key, static_cast<std::int64_t>(v));
    if (x < 1 || x > 4096) cfg.error(key, "must be in [1, 4096]");
    v = static_cast<std::size_t>(x);
  };
  extent("model.frames", g.frames);
  extent("model.height", g.height);
  extent("model.width", g.width);
  extent("model.channels", g.channels);
  return g;
}

Grid grid_value(const Config& cfg, const std::string& key, const Extents& dims) {
  double v = 0.0;
  const std::string s = cfg.str(key);
  std::istringstream in(s);
  if (in >> v && (in >> std::ws).eof()) return Grid(dims, v);
  const Grid g = load_dfvt(cfg.path(key));
  if (g.dims() != dims) cfg.error(key, "grid dims do not match analytic.dims");
  return g;
}

// model.kind = toydit: model.checkpoint; model.kind = analytic:
// analytic.dims plus analytic.mean.<label> for labels 0, 1, ... (a number
// fills the grid, anything else is a DFVT path).
Model load_model(const Config& cfg) {
  Model m;
  const std::string kind = cfg.str("model.kind", "toydit");
  if (kind == "toydit") {
    const fs::path ckpt = cfg.path("model.checkpoint");
    if (!fs::exists(ckpt)) cfg.error("model.checkpoint", "'" + ckpt.string() + "' does not exist");
    m.dit = std::make_unique<toy::ToyDiT>(toy::load_checkpoint(ckpt));
    const auto& mc = m.dit->config();
    const auto p = schedule_params(cfg, mc.family, mc.horizon);
    if (p.family != mc.family) cfg.error("schedule.family", "checkpoint was trained for " + std::string(to_string(mc.family)));
    if (p.horizon != mc.horizon) cfg.error("schedule.horizon", "checkpoint was trained with another horizon");
    m.sched = flow::Schedule(p);
    m.codec = codec_of(cfg);
  } else if (kind == "analytic") {
    m.sched = flow::Schedule(schedule_params(cfg, flow::Family::VpSde, 1.0));
    const Extents dims = cfg.indices("analytic.dims");
    std::vector<Grid> means;
    for (int label = 0; cfg.has("analytic.mean." + std::to_string(label)); ++label) {
      means.push_back(grid_value(cfg, "analytic.mean." + std::to_string(label), dims));
    }
    if (means.empty()) cfg.error("analytic.mean.0", "an analytic model needs at least one mean");
    m.analytic = std::make_unique<toy::AnalyticGaussianModel>(m.sched, std::move(means));
    if (codec_of(cfg) != toy::CodecKind::Identity) cfg.error("model.codec", "analytic models use the identity codec");
  } else {
    cfg.error("model.kind", "expected toydit or analytic, got '" + kind + "'");
  }
  return m;
}

ConditionId condition(const Config& cfg, const std::string& key, const Model& m) {
  const auto v = cfg.integer(key);
  if (v < 0 || v > 1000000) cfg.error(key, "must be a non-negative label");
  const ConditionId c{static_cast<int>(v)};
  const bool known = m.dit ? m.dit->has_condition(c) : m.analytic->has_condition(c);
  if (!known) cfg.error(key, fmt::format("the model has no condition {}", v));
  return c;
}

std::vector<toy::DatasetKind> dataset_kinds(const Config& cfg) {
  std::vector<toy::DatasetKind> kinds;
  for (const auto& w : cfg.words("dataset.kind")) {
    try {
      kinds.push_back(toy::parse_dataset_kind(w));
    } catch (const Error& e) {
      cfg.error("dataset.kind", e.what());
    }
  }
  return kinds;
}

// Clips of all kinds interleaved; kind j draws from stream 100 + j.
std::vector<toy::ToyClip> make_dataset(const Config& cfg, const toy::ClipGeometry& geom,
                                       std::vector<std::string>* kind_names = nullptr) {
  const auto kinds = dataset_kinds(cfg);
  const auto count = cfg.integer("dataset.count", 8);
  if (count < 1 || count > 100000) cfg.error("dataset.count", "must be in [1, 100000]");
  const RngStream root(seed_of(cfg));
  std::vector<std::vector<toy::ToyClip>> sets;
  for (std::size_t j = 0; j < kinds.size(); ++j) {
    sets.push_back(toy::make_toy_dataset(kinds[j], static_cast<std::size_t>(count), root.fork(100 + j), geom));
  }
  std::vector<toy::ToyClip> out;
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    for (std::size_t j = 0; j < kinds.size(); ++j) {
      out.push_back(std::move(sets[j][i]));
      if (kind_names) kind_names->emplace_back(toy::to_string(kinds[j]));
    }
  }
  return out;
}

std::string dfvt_bytes(const Grid& g) {
  const auto b = encode_dfvt(g);
  return std::string(b.begin(), b.end());
}

void check_geometry(const Grid& latent, flow::VelocityProvider& model, const std::string& what) {
  const Extents want = model.geometry();
  if (!want.empty() && latent.dims() != want) {
    auto show = [](const Extents& e) { return fmt::format("({})", fmt::join(e, ", ")); };
    fail(ErrorKind::Shape, fmt::format("{}: encoded geometry {} does not match the model geometry {}", what,
                                       show(latent.dims()), show(want)));
  }
}

std::string num(double v) { return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string("nan"); }

// --- dataset-gen -----------------------------------------------------------

void cmd_dataset_gen(Config& cfg, const RunOptions& opt, std::ostream& log) {
  const toy::ClipGeometry geom = pixel_geometry(cfg);
  std::vector<std::string> names;
  const auto clips = make_dataset(cfg, geom, &names);
  const fs::path dir = out_dir(cfg, opt);
  const bool frames = cfg.flag("output.frames", false);
  Manifest manifest("dataset-gen", cfg.hash());
  fs::create_directories(dir / "clips");
  std::string labels = "clip_id,kind,label\n";
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const std::string id = fmt::format("clip_{:04d}", i);
    manifest.write(dir, "clips/" + id + ".dfvt", dfvt_bytes(clips[i].video));
    labels += fmt::format("{},{},{}\n", id, names[i], clips[i].label.label);
    if (frames) {
      fs::create_directories(dir / "frames" / id);
      for (const auto& f : write_frames(dir / "frames" / id, clips[i].video)) {
        manifest.record("frames/" + id + "/" + f, read_file(dir / "frames" / id / f));
      }
    }
  }
  manifest.write(dir, "labels.csv", labels);
  manifest.save(dir);
  log << fmt::format("dataset-gen: {} clips -> {}\n", clips.size(), dir.string());
}

// --- train -----------------------------------------------------------------

void cmd_train(Config& cfg, const RunOptions& opt, std::ostream& log) {
  const auto seed = seed_of(cfg);
  const toy::ClipGeometry pixels = pixel_geometry(cfg);
  const toy::CodecKind codec = codec_of(cfg);
  auto data = make_dataset(cfg, pixels);
  for (auto& c : data) c.video = toy::encode(c.video, codec);

  toy::ToyDiTConfig mc;
  mc.geometry = toy::latent_geometry(pixels, codec);
  mc.width = static_cast<std::size_t>(cfg.integer("model.embed_width", static_cast<std::int64_t>(mc.width)));
  mc.blocks = static_cast<std::size_t>(cfg.integer("model.blocks", static_cast<std::int64_t>(mc.blocks)));
  mc.text_tokens = static_cast<std::size_t>(cfg.integer("model.text_tokens", static_cast<std::int64_t>(mc.text_tokens)));
  mc.mlp_hidden = static_cast<std::size_t>(cfg.integer("model.mlp_hidden", static_cast<std::int64_t>(mc.mlp_hidden)));
  const auto p = schedule_params(cfg, flow::Family::FlowMatching, 1.0);
  mc.family = p.family;
  mc.horizon = p.horizon;
  const flow::Schedule sched(p);

  toy::TrainOptions to;
  to.epochs = cfg.u64("train.epochs", to.epochs);
  to.lr = cfg.real("train.lr", to.lr);
  to.batch = cfg.u64("train.batch", to.batch);
  to.probe_every = cfg.u64("train.probe_every", to.probe_every);
  to.probe_items = cfg.u64("train.probe_items", to.probe_items);
  if (!(to.lr > 0.0) || to.batch == 0 || to.probe_every == 0) cfg.error("train.lr", "lr, batch and probe_every must be positive");

  const RngStream root(seed);
  toy::ToyDiT model(mc, root.fork(1));
  const auto start = std::chrono::steady_clock::now();
  const auto report = toy::train_toydit(model, data, sched, to, root.fork(2));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir = out_dir(cfg, opt);
  Manifest manifest("train", cfg.hash());
  toy::save_checkpoint(model, dir / "checkpoint");
  for (const auto& entry : fs::directory_iterator(dir / "checkpoint")) {
    manifest.record("checkpoint/" + entry.path().filename().string(), read_file(entry.path()));
  }
  std::string curve = "epoch,train_loss,probe_loss\n";
  for (const auto& pt : report.curve) curve += fmt::format("{},{},{}\n", pt.epoch, num(pt.train_loss), num(pt.probe_loss));
  manifest.write(dir, "loss.csv", curve);
  manifest.save(dir);
  log << fmt::format("train: {} clips, {} epochs, probe loss {:.4f} -> {:.4f} ({:.1f} s)\n", data.size(), to.epochs,
                     report.baseline_probe_loss, report.final_probe_loss, secs);
}

// --- edit ------------------------------------------------------------------

struct SourceClip {
  Grid video;
  Grid latent;
};

SourceClip load_source(const Config& cfg, Model& m) {
  const fs::path src = cfg.path("edit.source");
  if (!fs::exists(src)) cfg.error("edit.source", "'" + src.string() + "' does not exist");
  SourceClip s;
  s.video = load_dfvt(src);
  s.latent = m.codec == toy::CodecKind::Identity ? s.video : toy::encode(s.video, m.codec);
  check_geometry(s.latent, m.provider(), "edit.source");
  return s;
}

guide::BinarizePolicy binarize_policy(const Config& cfg) {
  guide::BinarizePolicy b;
  const std::string policy = cfg.str("edit.mask_policy", "quantile");
  if (policy == "quantile") {
    b.kind = guide::ThresholdPolicy::Quantile;
  } else if (policy == "mean-plus-k-std") {
    b.kind = guide::ThresholdPolicy::MeanPlusKStd;
  } else {
    cfg.error("edit.mask_policy", "expected quantile or mean-plus-k-std");
  }
  b.q = cfg.real("edit.mask_q", b.q);
  b.k = cfg.real("edit.mask_k", b.k);
  b.dilation = static_cast<int>(cfg.integer("edit.mask_dilation", b.dilation));
  return b;
}

// edit.mask_schedule: none | ica | external | ica+external.
void mask_options(const Config& cfg, const Model& m, const Grid& video, edit::EditOptions& eo, std::ostream& log) {
  const std::string schedule = cfg.str("edit.mask_schedule", "none");
  const bool has_external = cfg.has("edit.external_mask");
  auto external = [&] {
    const std::size_t frames = video.rank() >= 1 ? video.dims()[0] : 1;
    Grid pixel = load_mask(cfg.path("edit.external_mask"), frames);
    Grid token = toy::encode_mask(pixel, m.codec);
    eo.external = guide::make_mask(std::move(token), guide::MaskSource::External);
  };
  if (schedule == "none") {
    if (has_external) log << "warning: edit.external_mask is ignored with edit.mask_schedule=none\n";
  } else if (schedule == "ica") {
    eo.ica = true;
  } else if (schedule == "external") {
    if (!has_external) cfg.error("edit.mask_schedule", "'external' needs edit.external_mask");
    external();
  } else if (schedule == "ica+external") {
    eo.ica = true;
    if (has_external) {
      external();
    } else {
      log << "warning: edit.mask_schedule=ica+external without edit.external_mask; using the ICA mask at every step\n";
    }
  } else {
    cfg.error("edit.mask_schedule", "expected none, ica, external or ica+external");
  }
}

void write_video_outputs(const fs::path& dir, const Grid& video, bool frames, Manifest& manifest) {
  manifest.write(dir, "edited.dfvt", dfvt_bytes(video));
  if (!frames || video.rank() != 4 || (video.dims()[3] != 1 && video.dims()[3] != 3)) return;
  fs::create_directories(dir / "frames");
  for (const auto& f : write_frames(dir / "frames", video)) manifest.record("frames/" + f, read_file(dir / "frames" / f));
}

metrics::MetricsRow clip_metrics(const std::string& id, const Grid& source, const Grid& edited, const Grid* mask,
                                 std::ostream& log) {
  metrics::MetricsRow row{id, metrics::psnr(source, edited), std::nan(""), std::nan("")};
  if (mask) {
    try {
      row.masked_psnr = metrics::masked_psnr(source, edited, *mask);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UndefinedRegion) throw;
      log << "note: masked PSNR undefined, the edit mask covers every pixel\n";
    }
  }
  if (edited.rank() == 4) {
    try {
      row.frame_consistency = metrics::frame_consistency(edited).value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientFrames) throw;
    }
  }
  return row;
}

std::string metrics_csv(const std::vector<metrics::MetricsRow>& rows) {
  std::ostringstream s;
  metrics::write_metrics_csv(s, rows);
  return s.str();
}

void cmd_edit(Config& cfg, const RunOptions& opt, std::ostream& log) {
  Model m = load_model(cfg);
  const SourceClip src = load_source(cfg, m);
  const ConditionId c0 = condition(cfg, "edit.c0", m);
  const ConditionId c1 = condition(cfg, "edit.c1", m);
  const auto seed = seed_of(cfg);
  const bool timing = cfg.flag("output.timing", true);
  const bool frames = cfg.flag("output.frames", true);
  const std::string baseline = cfg.str("edit.baseline", "none");
  auto& model = m.provider();
  Manifest manifest("edit", cfg.hash());
  const fs::path dir = out_dir(cfg, opt);

  if (baseline == "none") {
    edit::EditOptions eo;
    eo.gamma = cfg.real("edit.gamma", m.dit ? 0.2 : 0.0);
    if (cfg.has("edit.er_tokens")) eo.er_tokens = cfg.indices("edit.er_tokens");
    eo.ica_token = cfg.u64("edit.ica_token", 0);
    eo.capture_layer = static_cast<int>(cfg.integer("edit.capture_layer", -1));
    eo.binarize = binarize_policy(cfg);
    eo.shared_noise = cfg.flag("edit.shared_noise", true);
    eo.codec = m.codec;
    eo.seed = seed;
    mask_options(cfg, m, src.video, eo, log);
    const auto r = edit::run_dfvedit(src.video, c0, c1, model, m.sched, eo);

    std::ostringstream full, canon;
    edit::write_transcript(full, r.records, timing);
    edit::write_transcript(canon, r.records, false);
    manifest.write(dir, "transcript.csv", full.str(), canon.str());
    write_video_outputs(dir, r.video, frames, manifest);
    const bool masked = eo.ica || eo.external.has_value();
    if (masked) manifest.write(dir, "union_mask.dfvt", dfvt_bytes(r.union_mask));
    const auto row = clip_metrics("edit", src.video, r.video, masked ? &r.union_mask : nullptr, log);
    manifest.write(dir, "metrics.csv", metrics_csv({row}));
    log << fmt::format("edit: {} steps, {} model calls ({} items), psnr {}\n", r.records.size(), r.calls.calls,
                       r.calls.items, num(row.psnr));
  } else if (baseline == "inversion") {
    const double lambda = cfg.real("edit.lambda", 1.0);
    const auto r = edit::baseline_inversion_edit(src.latent, c0, c1, model, m.sched, lambda);
    const Grid video = m.codec == toy::CodecKind::Identity ? r.edited : toy::decode(r.edited, m.codec);
    write_video_outputs(dir, video, frames, manifest);
    const auto row = clip_metrics("inversion", src.video, video, nullptr, log);
    manifest.write(dir, "metrics.csv", metrics_csv({row}));
    log << fmt::format("edit (inversion baseline): psnr {}\n", num(row.psnr));
  } else if (baseline == "dds") {
    const double eta = cfg.real("edit.dds_eta", 0.1);
    const auto iters = cfg.u64("edit.dds_max_iters", 200);
    const double tol = cfg.real("edit.dds_tol", 1e-4);
    const auto r = edit::baseline_dds_edit(src.latent, c0, c1, model, m.sched, eta, iters, tol, RngStream(seed).fork(7));
    std::ostringstream full, canon;
    edit::write_dds_transcript(full, r, timing);
    edit::write_dds_transcript(canon, r, false);
    manifest.write(dir, "transcript.csv", full.str(), canon.str());
    const Grid video = m.codec == toy::CodecKind::Identity ? r.edited : toy::decode(r.edited, m.codec);
    write_video_outputs(dir, video, frames, manifest);
    const auto row = clip_metrics("dds", src.video, video, nullptr, log);
    manifest.write(dir, "metrics.csv", metrics_csv({row}));
    log << fmt::format("edit (dds baseline): {} iterations, {}, psnr {}\n", r.iterations,
                       r.converged ? "converged" : "not converged", num(row.psnr));
  } else {
    cfg.error("edit.baseline", "expected none, inversion or dds");
  }
  manifest.save(dir);
}

// --- oracle ----------------------------------------------------------------

struct OracleRun {
  std::vector<std::string> step_rows;
  double cdfv_shift = 0.0;
  double oracle_shift = 0.0;
  double cdfv_vs_oracle = 0.0;
  double cdfv_vs_closed = std::nan("");
};

double rel(double err, double ref) { return ref > 0.0 ? err / ref : err; }

OracleRun oracle_run(Model& m, const flow::ScheduleParams& base, int steps, const Grid& z0, ConditionId c0,
                     ConditionId c1, std::uint64_t seed) {
  flow::ScheduleParams p = base;
  p.steps = steps;
  const flow::Schedule sched(p);
  toy::AnalyticGaussianModel model(sched, {m.analytic->mean(c0), m.analytic->mean(c1)});
  const ConditionId a{0}, b{1};
  const RngStream noise(seed);
  const Grid zT = flow::forward_marginal(sched, z0, sched.horizon(), noise.gaussian_at(steps, z0.dims()));
  const auto oracle = edit::dfv_oracle(model, sched, zT, a, b);

  OracleRun run;
  edit::EditState s = edit::start_edit(z0, sched, noise);
  for (int k = 0; k < steps; ++k) {
    auto r = edit::cdfv_step(s, model, sched, a, b);
    const Grid& dv_o = oracle.steps[static_cast<std::size_t>(k)].dv;
    const double err = reduce_norm(elementwise(r.record.dv, dv_o, ElementOp::Sub), NormKind::L2);
    const double ref = reduce_norm(dv_o, NormKind::L2);
    run.step_rows.push_back(fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}", r.record.step, r.record.time,
                                        reduce_norm(r.record.dv, NormKind::L2), ref, err, rel(err, ref)));
    s = std::move(r.state);
  }
  const Grid cdfv = elementwise(s.target, z0, ElementOp::Sub);
  const Grid orc = elementwise(oracle.z0_tgt, oracle.z0_src, ElementOp::Sub);
  run.cdfv_shift = reduce_norm(cdfv, NormKind::L2);
  run.oracle_shift = reduce_norm(orc, NormKind::L2);
  run.cdfv_vs_oracle = rel(reduce_norm(elementwise(cdfv, orc, ElementOp::Sub), NormKind::L2), run.oracle_shift);
  if (sched.family() == flow::Family::VpSde) {
    // Unit-variance Gaussians: the exact shift is Δμ (1 - sqrt(ᾱ(T))).
    const Grid dmu = elementwise(model.mean(b), model.mean(a), ElementOp::Sub);
    const Grid closed = scaled(dmu, 1.0 - std::sqrt(sched.alpha_bar(sched.horizon())));
    run.cdfv_vs_closed =
        rel(reduce_norm(elementwise(cdfv, closed, ElementOp::Sub), NormKind::L2), reduce_norm(closed, NormKind::L2));
  }
  return run;
}

void cmd_oracle(Config& cfg, const RunOptions& opt, std::ostream& log) {
  if (cfg.str("model.kind", "toydit") != "analytic") {
    throw CliExit(kOracleUnavailable, "oracle: the closed-form comparison needs model.kind=analytic");
  }
  Model m = load_model(cfg);
  const ConditionId c0 = condition(cfg, "edit.c0", m);
  const ConditionId c1 = condition(cfg, "edit.c1", m);
  const auto seed = seed_of(cfg);
  const Grid z0 = cfg.has("oracle.z0") ? grid_value(cfg, "oracle.z0", m.analytic->geometry())
                                       : Grid(m.analytic->geometry(), 0.0);
  std::vector<std::size_t> sweep{static_cast<std::size_t>(m.sched.steps())};
  if (cfg.has("oracle.sweep")) sweep = cfg.indices("oracle.sweep");
  for (auto n : sweep) {
    if (n < 1 || n > 1000000) cfg.error("oracle.sweep", "step counts must be in [1, 1000000]");
  }

  const fs::path dir = out_dir(cfg, opt);
  Manifest manifest("oracle", cfg.hash());
  std::vector<OracleRun> runs;
  for (auto n : sweep) runs.push_back(oracle_run(m, m.sched.params(), static_cast<int>(n), z0, c0, c1, seed));

  std::string steps = "step,t,dv_cdfv_l2,dv_oracle_l2,dv_err_l2,dv_err_rel\n";
  for (const auto& row : runs.front().step_rows) steps += row + "\n";
  manifest.write(dir, "oracle_steps.csv", steps);

  std::string endpoint = "steps,cdfv_shift_l2,oracle_shift_l2,cdfv_vs_oracle_rel,cdfv_vs_closed_rel,halving_ratio\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string ratio = "n/a";
    if (i + 1 < runs.size() && sweep[i + 1] == 2 * sweep[i] && runs[i + 1].cdfv_vs_closed > 0.0) {
      ratio = fmt::format("{:.6g}", runs[i].cdfv_vs_closed / runs[i + 1].cdfv_vs_closed);
    }
    const auto& r = runs[i];
    endpoint += fmt::format("{},{:.10g},{:.10g},{:.6g},{},{}\n", sweep[i], r.cdfv_shift, r.oracle_shift,
                            r.cdfv_vs_oracle, std::isnan(r.cdfv_vs_closed) ? "n/a" : fmt::format("{:.6g}", r.cdfv_vs_closed),
                            ratio);
  }
  manifest.write(dir, "oracle_endpoint.csv", endpoint);
  manifest.save(dir);
  log << endpoint;
}

// --- memest ----------------------------------------------------------------

void cmd_memest(Config& cfg, const RunOptions& opt, std::ostream& log) {
  std::vector<std::pair<std::string, std::string>> arch;
  for (const auto& kv : cfg.entries()) {
    if (kv.first.rfind("arch.", 0) == 0) arch.push_back(kv);
  }
  const auto specs = arch.empty() ? cost::reference_architectures() : cost::arch_specs_from_keys(arch);
  const double tol = cfg.real("memest.tolerance", 0.10);
  const auto rows = cost::memory_table(specs, tol);

  std::ostringstream text, csv;
  cost::write_memory_text(text, rows);
  cost::write_memory_csv(csv, rows);
  log << text.str();
  if (cfg.has("output.dir") || !opt.out.empty()) {
    const fs::path dir = out_dir(cfg, opt);
    Manifest manifest("memest", cfg.hash());
    manifest.write(dir, "memory.csv", csv.str());
    manifest.write(dir, "memory.txt", text.str());
    manifest.save(dir);
  }
  const bool any = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.estimate_gib.has_value(); });
  if (!any) throw CliExit(kNoOp, "memest: every row is multi-scale, nothing to estimate");
}

// --- bench -----------------------------------------------------------------

void cmd_bench(Config& cfg, const RunOptions& opt, std::ostream& log) {
  Model m = load_model(cfg);
  const SourceClip src = load_source(cfg, m);
  const ConditionId c0 = condition(cfg, "edit.c0", m);
  const ConditionId c1 = condition(cfg, "edit.c1", m);
  const auto seed = seed_of(cfg);
  auto& model = m.provider();

  edit::EditOptions eo;
  eo.gamma = cfg.real("edit.gamma", m.dit ? 0.2 : 0.0);
  eo.codec = m.codec;
  eo.seed = seed;
  eo.binarize = binarize_policy(cfg);
  mask_options(cfg, m, src.video, eo, log);
  const Grid zT = RngStream(seed).fork(9).gaussian_at(0, src.latent.dims());

  // One untimed forward pass so allocator warm-up lands in neither run.
  (void)model.evaluate(zT, m.sched.horizon(), c1);
  const Extents geom = src.latent.dims();
  const int steps = m.sched.steps();
  const auto sample = cost::measure_run(model, geom, steps, [&] { (void)flow::sample_pf_ode(m.sched, model, c1, zT); });
  const auto edited = cost::measure_run(model, geom, steps, [&] { (void)edit::run_dfvedit(src.video, c0, c1, model, m.sched, eo); });
  const auto report = cost::measure_efficiency(edited, sample);

  std::ostringstream csv;
  cost::write_efficiency_csv(csv, report);
  const fs::path dir = out_dir(cfg, opt);
  Manifest manifest("bench", cfg.hash());
  const std::string canon = fmt::format("model_calls_edit={}\nmodel_calls_sample={}\nitems_edit={}\nitems_sample={}\n",
                                        report.model_calls_edit, report.model_calls_sample, report.items_edit,
                                        report.items_sample);
  manifest.write(dir, "efficiency.csv", csv.str(), canon);
  manifest.save(dir);
  log << csv.str();
}

// --- metrics ---------------------------------------------------------------

void cmd_metrics(Config& cfg, const RunOptions& opt, std::ostream& log) {
  const Grid source = load_dfvt(cfg.path("metrics.source"));
  const Grid edited = load_dfvt(cfg.path("metrics.edited"));
  if (!source.same_shape(edited)) fail(ErrorKind::Shape, "metrics.source and metrics.edited differ in shape");
  std::optional<Grid> mask;
  if (cfg.has("metrics.mask")) {
    mask = load_mask(cfg.path("metrics.mask"), source.rank() >= 1 ? source.dims()[0] : 1);
  }
  const auto row = clip_metrics(cfg.str("metrics.clip_id", "clip"), source, edited, mask ? &*mask : nullptr, log);
  const std::string csv = metrics_csv({row});
  if (cfg.has("output.dir") || !opt.out.empty()) {
    const fs::path dir = out_dir(cfg, opt);
    Manifest manifest("metrics", cfg.hash());
    manifest.write(dir, "metrics.csv", csv);
    manifest.save(dir);
  }
  log << csv;
}

}  // namespace

void run_command(const std::string& command, Config& cfg, const RunOptions& opt, std::ostream& log) {
  if (opt.seed) cfg.set("seed", std::to_string(*opt.seed));
  if (command == "train") {
    cmd_train(cfg, opt, log);
  } else if (command == "edit") {
    cmd_edit(cfg, opt, log);
  } else if (command == "oracle") {
    cmd_oracle(cfg, opt, log);
  } else if (command == "memest") {
    cmd_memest(cfg, opt, log);
  } else if (command == "bench") {
    cmd_bench(cfg, opt, log);
  } else if (command == "metrics") {
    cmd_metrics(cfg, opt, log);
  } else if (command == "dataset-gen") {
    cmd_dataset_gen(cfg, opt, log);
  } else {
    fail(ErrorKind::Config, "unknown command '" + command + "'");
  }
  for (const auto& k : cfg.unused()) log << "warning: " << cfg.where(k) << ": unused key '" << k << "'\n";
}

int exit_code_of(const std::exception& e) {
  if (const auto* x = dynamic_cast<const CliExit*>(&e)) return x->code();
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return kFailure;
  switch (err->kind()) {
    case ErrorKind::Config:
    case ErrorKind::Parameter:
    case ErrorKind::Kind:
    case ErrorKind::Format:
    case ErrorKind::Condition:
    case ErrorKind::UnsupportedFamily:
    case ErrorKind::Layer:
      return kConfig;
    case ErrorKind::Shape:
    case ErrorKind::InvalidDimension:
      return kGeometry;
    default:
      return kFailure;
  }
}

}  // namespace dfv::cli
