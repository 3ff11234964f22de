#include "dfv/editengine/edit.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "dfv/numcore/error.hpp"
#include "dfv/toymodels/attention.hpp"

namespace dfv::edit {

namespace {

int grid_index(const flow::Schedule& sched, double t) {
  const auto i = static_cast<int>(std::lround(t / sched.horizon() * sched.steps()));
  if (i < 0 || i > sched.steps() || sched.time_at(i) != t) {
    fail(ErrorKind::Domain, "edit time " + std::to_string(t) + " is not on the schedule grid");
  }
  return i;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

// Mask entry governing latent entry j: same dims, or (F, H, W) against an
// (F, H, W, D) latent.
std::size_t mask_stride(const Grid& latent, const Grid& mask) {
  if (mask.dims() == latent.dims()) return 1;
  const auto& ld = latent.dims();
  if (ld.size() >= 2 && Extents(ld.begin(), ld.end() - 1) == mask.dims()) return ld.back();
  fail(ErrorKind::Shape, "mask dims match neither the latent nor its token grid");
}

double allowed_fraction(const Grid& latent, const Grid* mask) {
  if (!mask) return 1.0;
  mask_stride(latent, *mask);
  return guide::mask_fraction(*mask);
}

std::pair<Grid, Grid> batch_of_two(flow::VelocityProvider& model, const Grid& x_tgt, ConditionId c1, const Grid& x_src,
                                   ConditionId c0, double t) {
  const flow::BatchItem items[] = {{x_tgt, t, c1}, {x_src, t, c0}};
  auto v = model.evaluate_batch(items);
  return {std::move(v[0]), std::move(v[1])};
}

flow::CallStats stats_since(const flow::CallStats& now, const flow::CallStats& before) {
  flow::CallStats d;
  d.calls = now.calls - before.calls;
  d.items = now.items - before.items;
  for (const auto& [batch, n] : now.calls_by_batch) {
    const auto it = before.calls_by_batch.find(batch);
    const std::uint64_t prev = it == before.calls_by_batch.end() ? 0 : it->second;
    if (n > prev) d.calls_by_batch[batch] = n - prev;
  }
  return d;
}

}  // namespace

EditState start_edit(const Grid& z0, const flow::Schedule& sched, const RngStream& noise) {
  if (z0.empty()) fail(ErrorKind::InvalidDimension, "empty source latent");
  if (!all_finite(z0)) fail(ErrorKind::Domain, "source latent is not finite");
  return {z0, z0, sched.horizon(), noise};
}

OracleResult dfv_oracle(flow::VelocityProvider& model, const flow::Schedule& sched, const Grid& zT, ConditionId c0,
                        ConditionId c1) {
  if (!all_finite(zT)) fail(ErrorKind::Domain, "zT is not finite");
  OracleResult r{zT, zT, {}};
  r.steps.reserve(static_cast<std::size_t>(sched.steps()));
  for (int i = sched.steps(); i >= 1; --i) {
    const double t = sched.time_at(i);
    const double dt = t - sched.time_at(i - 1);
    auto [v1, v0] = batch_of_two(model, r.z0_tgt, c1, r.z0_src, c0, t);
    r.z0_tgt = elementwise(r.z0_tgt, v1, ElementOp::Sub, dt);
    r.z0_src = elementwise(r.z0_src, v0, ElementOp::Sub, dt);
    DeltaFlowRecord rec;
    rec.step = i;
    rec.time = t;
    rec.dt = dt;
    rec.dv = elementwise(v1, v0, ElementOp::Sub);
    rec.v_tgt = std::move(v1);
    rec.v_src = std::move(v0);
    rec.model_calls = model.stats().calls;
    r.steps.push_back(std::move(rec));
  }
  return r;
}

BranchInputs branch_inputs(const EditState& s, const flow::Schedule& sched, bool shared_noise) {
  if (!s.source.same_shape(s.target)) fail(ErrorKind::Shape, "source and target latents differ in dims");
  const int i = grid_index(sched, s.time);
  if (i == 0) fail(ErrorKind::Exhausted, "edit already reached t = 0");
  const Grid eps = s.noise.gaussian_at(static_cast<std::uint64_t>(i), s.source.dims());
  BranchInputs in{i, s.time - sched.time_at(i - 1), Grid{}, flow::forward_marginal(sched, s.source, s.time, eps)};
  if (shared_noise) {
    in.x_tgt = flow::forward_marginal(sched, s.target, s.time, eps);
  } else {
    const Grid other = s.noise.fork(s.noise.stream() + 1).gaussian_at(static_cast<std::uint64_t>(i), s.source.dims());
    in.x_tgt = flow::forward_marginal(sched, s.target, s.time, other);
  }
  return in;
}

Grid masked_update(const Grid& target, const Grid& update, double dt, const Grid* mask) {
  if (!target.same_shape(update)) fail(ErrorKind::Shape, "update dims differ from the latent");
  if (!mask) return elementwise(target, update, ElementOp::Sub, dt);
  const std::size_t stride = mask_stride(target, *mask);
  Grid out = target;
  for (std::size_t j = 0; j < out.size(); ++j) {
    if ((*mask)[j / stride] != 0.0) out[j] = target[j] - dt * update[j];
  }
  if (!all_finite(out)) fail(ErrorKind::Domain, "masked update produced a non-finite value");
  return out;
}

StepResult cdfv_step_with(const EditState& s, const flow::Schedule& sched, const BranchEvaluator& eval,
                          const Grid* mask, bool shared_noise) {
  BranchInputs in = branch_inputs(s, sched, shared_noise);
  BranchEval ev = eval(in.x_tgt, in.x_src, s.time);
  if (!ev.v_tgt.same_shape(s.target) || !ev.v_src.same_shape(s.target)) fail(ErrorKind::Shape, "branch velocity dims");
  const Grid* m = ev.mask ? &*ev.mask : mask;

  StepResult r{s, {}};
  DeltaFlowRecord& rec = r.record;
  rec.step = in.step;
  rec.time = s.time;
  rec.dt = in.dt;
  rec.dv = elementwise(ev.v_tgt, ev.v_src, ElementOp::Sub);
  rec.masked_fraction = allowed_fraction(s.target, m);
  rec.mask_id = ev.mask_id;
  r.state.target = masked_update(s.target, rec.dv, in.dt, m);
  r.state.time = sched.time_at(in.step - 1);
  rec.v_tgt = std::move(ev.v_tgt);
  rec.v_src = std::move(ev.v_src);
  return r;
}

StepResult cdfv_step(const EditState& s, flow::VelocityProvider& model, const flow::Schedule& sched, ConditionId c0,
                     ConditionId c1, const Grid* mask, bool shared_noise) {
  auto eval = [&](const Grid& x_tgt, const Grid& x_src, double t) {
    auto [v1, v0] = batch_of_two(model, x_tgt, c1, x_src, c0, t);
    return BranchEval{std::move(v1), std::move(v0), std::nullopt, std::nullopt};
  };
  StepResult r = cdfv_step_with(s, sched, eval, mask, shared_noise);
  r.record.model_calls = model.stats().calls;
  return r;
}

EditResult run_dfvedit(const Grid& source, ConditionId c0, ConditionId c1, flow::VelocityProvider& model,
                       const flow::Schedule& sched, const EditOptions& opt) {
  auto* att = dynamic_cast<toy::AttentionModel*>(&model);
  if (!att && opt.gamma != 0.0) fail(ErrorKind::Parameter, "embedding reinforcement needs an attention model (set gamma = 0)");
  if (!att && opt.ica) fail(ErrorKind::Parameter, "ICA masks need an attention model");
  if (!model.has_condition(c0) || !model.has_condition(c1)) fail(ErrorKind::Condition, "unknown edit condition");

  // (1) encode
  const Grid z0 = toy::encode(source, opt.codec);
  const Extents geom = model.geometry();
  if (!geom.empty() && z0.dims() != geom) fail(ErrorKind::Shape, "source does not match the model geometry");
  const Extents tokens(z0.dims().begin(), z0.dims().end() - 1);
  if (opt.external && opt.external->grid.dims() != tokens) fail(ErrorKind::Shape, "external mask dims differ from the latent tokens");

  // (2) embedding reinforcement on the target condition
  Grid e0, e1;
  int layer = 0;
  if (att) {
    e0 = att->condition_embedding(c0);
    e1 = guide::embedding_reinforce(att->condition_embedding(c1), {opt.gamma, opt.er_tokens});
    layer = opt.capture_layer < 0 ? static_cast<int>(att->layers()) - 1 : opt.capture_layer;
  }

  const flow::CallStats before = model.stats();
  EditResult res;
  res.union_mask = Grid(tokens);
  bool any_mask = false;
  int current = 0;

  // (3) + (4): per-step evaluation, ICA extraction, masked update
  auto eval = [&](const Grid& x_tgt, const Grid& x_src, double t) {
    BranchEval ev;
    if (att) {
      const toy::AttentionQuery qs[] = {{x_tgt, t, e1, true}, {x_src, t, e0, false}};
      std::vector<int> capture;
      if (opt.ica) capture.push_back(layer);
      auto outs = att->evaluate_attention(qs, capture);
      ev.v_tgt = std::move(outs[0].velocity);
      ev.v_src = std::move(outs[1].velocity);
      if (opt.ica) {
        Grid raw = guide::extract_ica(outs[0].snapshots.at(0), opt.ica_token);
        const guide::GuidanceMask ica = guide::binarize_mask(raw, opt.binarize);
        guide::GuidanceMask applied =
            guide::mask_schedule(t, sched.horizon(), ica, opt.external ? &*opt.external : nullptr);
        ev.mask = applied.grid;
        ev.mask_id = static_cast<int>(res.ica_log.size());
        res.ica_log.push_back({current, t, std::move(raw), std::move(applied)});
        return ev;
      }
    } else {
      auto [v1, v0] = batch_of_two(model, x_tgt, c1, x_src, c0, t);
      ev.v_tgt = std::move(v1);
      ev.v_src = std::move(v0);
    }
    if (opt.external) ev.mask = opt.external->grid;
    return ev;
  };

  EditState st = start_edit(z0, sched, RngStream(opt.seed));
  res.records.reserve(static_cast<std::size_t>(sched.steps()));
  for (int i = sched.steps(); i >= 1; --i) {
    current = i;
    const auto t0 = std::chrono::steady_clock::now();
    StepResult r = cdfv_step_with(st, sched, eval, nullptr, opt.shared_noise);
    if (r.record.masked_fraction < 1.0 || opt.ica || opt.external) {
      any_mask = true;
      const Grid& m = opt.ica ? res.ica_log.back().applied.grid : opt.external->grid;
      for (std::size_t j = 0; j < m.size(); ++j) {
        if (m[j] != 0.0) res.union_mask[j] = 1.0;
      }
    }
    r.record.model_calls = stats_since(model.stats(), before).calls;
    r.record.millis = elapsed_ms(t0);
    st = std::move(r.state);
    res.records.push_back(std::move(r.record));
  }

  // (5) decode
  res.latent = st.target;
  res.video = toy::decode(st.target, opt.codec);
  if (!any_mask) res.union_mask = Grid(tokens, 1.0);
  res.union_mask = toy::decode_mask(res.union_mask, opt.codec);
  res.calls = stats_since(model.stats(), before);
  return res;
}

void write_transcript(std::ostream& out, const std::vector<DeltaFlowRecord>& records, bool with_timing) {
  out << "step,t,dv_l2,dv_maxabs,masked_fraction,model_calls,millis\n";
  out.precision(10);
  for (const auto& r : records) {
    out << r.step << ',' << r.time << ',' << reduce_norm(r.dv, NormKind::L2) << ','
        << reduce_norm(r.dv, NormKind::MaxAbs) << ',' << r.masked_fraction << ',' << r.model_calls << ','
        << (with_timing ? r.millis : 0.0) << '\n';
  }
}

// --- control form ------------------------------------------------------------

Grid control_term(const flow::Schedule& sched, const Grid& score_tgt, const Grid& score_src, double t) {
  if (!score_tgt.same_shape(score_src)) fail(ErrorKind::Shape, "control_term: score dims differ");
  const double sigma = sched.sigma(t);
  if (!(sigma > 0.0)) fail(ErrorKind::SingularTime, "control term is singular where sigma(t) = 0");
  const Grid diff = elementwise(score_tgt, score_src, ElementOp::Sub);
  return scaled(diff, 1.0 / sigma);
}

void validate(const ControlSpec& spec) {
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) fail(ErrorKind::Parameter, "lambda must be finite and >= 0");
  if (spec.transition == Transition::DdsProjection && !(spec.eta > 0.0)) fail(ErrorKind::Parameter, "eta must be positive");
}

Grid controlled_velocity(const flow::Schedule& sched, const Grid& v, const Grid& control, double t, double lambda) {
  const double k = lambda * 0.5 * sched.beta(t) * sched.sigma(t);
  return elementwise(v, control, ElementOp::Sub, k);
}

namespace {

std::pair<Grid, Grid> branch_scores(flow::VelocityProvider& model, const flow::ScoreProvider* scores,
                                    const flow::Schedule& sched, ControlKind kind, const Grid& x_tgt, ConditionId c1,
                                    const Grid& x_src, ConditionId c0, double t) {
  if (kind == ControlKind::ScoreDelta) {
    if (!scores) fail(ErrorKind::Parameter, "score-delta control needs a score provider");
    return {scores->score(x_tgt, t, c1), scores->score(x_src, t, c0)};
  }
  auto [v1, v0] = batch_of_two(model, x_tgt, c1, x_src, c0, t);
  return {flow::score_from_velocity(sched, x_tgt, t, v1), flow::score_from_velocity(sched, x_src, t, v0)};
}

}  // namespace

StepResult controlled_step(const EditState& s, flow::VelocityProvider& model, const flow::ScoreProvider* scores,
                           const flow::Schedule& sched, ConditionId c0, ConditionId c1, const ControlSpec& spec,
                           const Grid* mask) {
  validate(spec);
  if (sched.family() != flow::Family::VpSde) fail(ErrorKind::UnsupportedFamily, "the control form is written for vp-sde");
  BranchInputs in = branch_inputs(s, sched, true);
  const double t = s.time;
  auto [s1, s0] = branch_scores(model, scores, sched, spec.kind, in.x_tgt, c1, in.x_src, c0, t);
  const Grid C = control_term(sched, s1, s0, t);

  StepResult r{s, {}};
  DeltaFlowRecord& rec = r.record;
  rec.step = in.step;
  rec.time = t;
  rec.dt = in.dt;
  rec.masked_fraction = allowed_fraction(s.target, mask);
  if (spec.transition == Transition::Identity) {
    // Drift of the target branch relative to the source branch.
    const double hb = 0.5 * sched.beta(t);
    const Grid base = scaled(elementwise(in.x_tgt, in.x_src, ElementOp::Sub), -hb);
    rec.dv = controlled_velocity(sched, base, C, t, spec.lambda);
    r.state.target = masked_update(s.target, rec.dv, in.dt, mask);
  } else {
    const double k = spec.lambda * std::sqrt(1.0 - sched.alpha_bar(t)) * sched.sigma(t);
    rec.dv = scaled(C, -k);  // noise-prediction difference
    r.state.target = masked_update(s.target, rec.dv, spec.eta, mask);
  }
  r.state.time = sched.time_at(in.step - 1);
  rec.model_calls = model.stats().calls;
  return r;
}

flow::Trajectory controlled_sample(const flow::Schedule& sched, flow::VelocityProvider& model,
                                   const flow::ScoreProvider* scores, ConditionId c0, ConditionId c1, const Grid& zT,
                                   const ControlSpec& spec) {
  validate(spec);
  if (spec.transition != Transition::Identity) fail(ErrorKind::Parameter, "controlled sampling uses the identity transition");
  if (sched.family() != flow::Family::VpSde) fail(ErrorKind::UnsupportedFamily, "the control form is written for vp-sde");
  flow::Trajectory traj;
  traj.samples.push_back({zT, sched.horizon()});
  for (int i = sched.steps(); i >= 1; --i) {
    const flow::FlowSample& cur = traj.samples.back();
    const double t = cur.time;
    const double dt = t - sched.time_at(i - 1);
    Grid v0;
    Grid C;
    if (spec.lambda == 0.0) {
      v0 = model.evaluate(cur.state, t, c0);
    } else if (spec.kind == ControlKind::ScoreDelta) {
      if (!scores) fail(ErrorKind::Parameter, "score-delta control needs a score provider");
      v0 = model.evaluate(cur.state, t, c0);
      C = control_term(sched, scores->score(cur.state, t, c1), scores->score(cur.state, t, c0), t);
    } else {
      auto [v1, v0b] = batch_of_two(model, cur.state, c1, cur.state, c0, t);
      C = control_term(sched, flow::score_from_velocity(sched, cur.state, t, v1),
                       flow::score_from_velocity(sched, cur.state, t, v0b), t);
      v0 = std::move(v0b);
    }
    Grid v = spec.lambda == 0.0 ? std::move(v0) : controlled_velocity(sched, v0, C, t, spec.lambda);
    flow::FlowSample next = flow::euler_step(cur, v, dt, sched.horizon());
    next.time = sched.time_at(i - 1);
    traj.velocities.push_back(std::move(v));
    traj.step_sizes.push_back(dt);
    traj.samples.push_back(std::move(next));
  }
  return traj;
}

// --- baselines ---------------------------------------------------------------

double delta_beta(double ab_prev, double ab_t) {
  if (!(ab_prev > 0.0 && ab_prev <= 1.0 && ab_t > 0.0 && ab_t <= 1.0)) fail(ErrorKind::Domain, "alpha_bar must lie in (0, 1]");
  return std::sqrt((1.0 - ab_prev) / ab_prev) - std::sqrt((1.0 - ab_t) / ab_t);
}

Grid ddim_transition(const Grid& x, const Grid& eps, double ab_t, double ab_prev) {
  const double ratio = std::sqrt(ab_prev / ab_t);
  const double db = delta_beta(ab_prev, ab_t);
  const Grid inner = elementwise(x, eps, ElementOp::Add, db * std::sqrt(ab_t));
  return scaled(inner, ratio);
}

InversionResult baseline_inversion_edit(const Grid& source, ConditionId c0, ConditionId c1,
                                        flow::VelocityProvider& model, const flow::Schedule& sched, double lambda) {
  if (sched.family() != flow::Family::VpSde) fail(ErrorKind::UnsupportedFamily, "DDIM inversion needs a vp-sde schedule");
  if (!all_finite(source)) fail(ErrorKind::Domain, "source is not finite");
  const int N = sched.steps();
  Grid x = source;
  for (int i = 0; i < N; ++i) {
    const double t = sched.time_at(i), tn = sched.time_at(i + 1);
    const Grid eps = flow::noise_from_velocity(sched, x, t, model.evaluate(x, t, c0));
    x = ddim_transition(x, eps, sched.alpha_bar(t), sched.alpha_bar(tn));
  }
  InversionResult r{Grid{}, x};
  for (int i = N; i >= 1; --i) {
    const double t = sched.time_at(i), tp = sched.time_at(i - 1);
    Grid eps;
    if (c0 == c1 || lambda == 0.0) {
      eps = flow::noise_from_velocity(sched, x, t, model.evaluate(x, t, c0));
    } else {
      auto [v1, v0] = batch_of_two(model, x, c1, x, c0, t);
      const Grid e1 = flow::noise_from_velocity(sched, x, t, v1);
      const Grid e0 = flow::noise_from_velocity(sched, x, t, v0);
      eps = lambda == 1.0 ? e1 : elementwise(e0, elementwise(e1, e0, ElementOp::Sub), ElementOp::Add, lambda);
    }
    x = ddim_transition(x, eps, sched.alpha_bar(t), sched.alpha_bar(tp));
  }
  r.edited = std::move(x);
  return r;
}

DdsResult baseline_dds_edit(const Grid& source, ConditionId c0, ConditionId c1, flow::VelocityProvider& model,
                            const flow::Schedule& sched, double eta, std::size_t max_iters, double tol,
                            const RngStream& rng) {
  if (!(eta > 0.0)) fail(ErrorKind::Parameter, "DDS step eta must be positive");
  if (max_iters == 0) fail(ErrorKind::Parameter, "max_iters must be at least 1");
  if (!all_finite(source)) fail(ErrorKind::Domain, "source is not finite");
  const double T = sched.horizon();
  DdsResult r{source, 0, false, {}};
  const std::uint64_t calls0 = model.stats().calls;
  for (std::size_t it = 0; it < max_iters; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const double t = T * (0.02 + 0.96 * rng.uniform_at(2 * it, 1)[0]);
    const Grid eps = rng.gaussian_at(2 * it + 1, source.dims());
    const Grid x_tgt = flow::forward_marginal(sched, r.edited, t, eps);
    const Grid x_src = flow::forward_marginal(sched, source, t, eps);
    auto [v1, v0] = batch_of_two(model, x_tgt, c1, x_src, c0, t);
    const Grid diff = elementwise(flow::noise_from_velocity(sched, x_tgt, t, v1),
                                  flow::noise_from_velocity(sched, x_src, t, v0), ElementOp::Sub);
    r.edited = elementwise(r.edited, diff, ElementOp::Sub, eta);
    r.iterations = it + 1;
    DeltaFlowRecord rec;
    rec.step = static_cast<int>(it + 1);
    rec.time = t;
    rec.dt = eta;
    rec.dv = diff;
    rec.model_calls = model.stats().calls - calls0;
    rec.millis = elapsed_ms(t0);
    r.records.push_back(std::move(rec));
    if (eta * reduce_norm(diff, NormKind::L2) < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

void write_dds_transcript(std::ostream& out, const DdsResult& r, bool with_timing) {
  out << "iteration,t,dv_l2,dv_maxabs,masked_fraction,model_calls,millis\n";
  out.precision(10);
  for (const auto& rec : r.records) {
    out << rec.step << ',' << rec.time << ',' << reduce_norm(rec.dv, NormKind::L2) << ','
        << reduce_norm(rec.dv, NormKind::MaxAbs) << ',' << rec.masked_fraction << ',' << rec.model_calls << ','
        << (with_timing ? rec.millis : 0.0) << '\n';
  }
}

}  // namespace dfv::edit
