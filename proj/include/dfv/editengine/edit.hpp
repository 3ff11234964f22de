#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dfv/flowcore/provider.hpp"
#include "dfv/flowcore/sampler.hpp"
#include "dfv/flowcore/schedule.hpp"
#include "dfv/guidance/guidance.hpp"
#include "dfv/numcore/rng.hpp"
#include "dfv/toymodels/codec.hpp"

namespace dfv::edit {

using flow::ConditionId;

/// Source clean latent Z_0 and the evolving target Ẑ_t. Ẑ lives in clean
/// latent space: it starts as Z_0 at t = T and is the edited latent at t = 0.
/// Both branches are noised with draws from `noise` addressed by step index.
struct EditState {
  Grid source;
  Grid target;
  double time = 0.0;
  RngStream noise{0};
};

EditState start_edit(const Grid& z0, const flow::Schedule& sched, const RngStream& noise);

struct DeltaFlowRecord {
  int step = 0;            // grid index i of the step t_i -> t_{i-1}
  double time = 0.0;       // t_i
  double dt = 0.0;
  Grid dv;                 // v_tgt - v_src, before masking
  Grid v_tgt;
  Grid v_src;
  std::optional<int> mask_id;
  double masked_fraction = 1.0;  // fraction of latent entries allowed to move
  std::uint64_t model_calls = 0; // cumulative, filled by drivers
  double millis = 0.0;           // wall-clock of the step, filled by drivers
};

// --- exact discrete DFV --------------------------------------------------

struct OracleResult {
  Grid z0_src;
  Grid z0_tgt;
  std::vector<DeltaFlowRecord> steps;
};

/// Two shared-noise pf-ode trajectories from zT under c0 and c1, one batched
/// evaluation per step. z0_tgt - z0_src equals -sum dt * dv up to rounding
/// of the two separate Euler recursions, and exactly when c0 == c1.
OracleResult dfv_oracle(flow::VelocityProvider& model, const flow::Schedule& sched, const Grid& zT, ConditionId c0,
                        ConditionId c1);

// --- CDFV ----------------------------------------------------------------

struct BranchEval {
  Grid v_tgt;
  Grid v_src;
  std::optional<Grid> mask;  // overrides the step's fixed mask when set
  std::optional<int> mask_id;
};

/// Evaluates the target branch at x_tgt and the source branch at x_src, both
/// at time t, with exactly one batched model call.
using BranchEvaluator = std::function<BranchEval(const Grid& x_tgt, const Grid& x_src, double t)>;

struct StepResult {
  EditState state;
  DeltaFlowRecord record;
};

/// Noised branch inputs Φ_t(Ẑ, ε) and Φ_t(Z_0, ε) for the state's grid step.
struct BranchInputs {
  int step;
  double dt;
  Grid x_tgt;
  Grid x_src;
};
BranchInputs branch_inputs(const EditState& s, const flow::Schedule& sched, bool shared_noise = true);

/// One CDFV step: Ẑ <- Ẑ - dt * M ⊙ (v_c1(x̂) - v_c0(x)). Entries where the
/// mask is 0 are not touched. A mask may be (F, H, W) for (F, H, W, D)
/// latents and then applies to every channel.
StepResult cdfv_step(const EditState& s, flow::VelocityProvider& model, const flow::Schedule& sched, ConditionId c0,
                     ConditionId c1, const Grid* mask = nullptr, bool shared_noise = true);
StepResult cdfv_step_with(const EditState& s, const flow::Schedule& sched, const BranchEvaluator& eval,
                          const Grid* mask = nullptr, bool shared_noise = true);

/// Applies dt * update to `target` where the mask allows it.
Grid masked_update(const Grid& target, const Grid& update, double dt, const Grid* mask);

struct EditOptions {
  double gamma = 0.2;                      // embedding reinforcement on the target rows
  std::vector<std::size_t> er_tokens = {0};
  bool ica = false;
  std::size_t ica_token = 0;
  int capture_layer = -1;                  // -1: last block
  guide::BinarizePolicy binarize;
  std::optional<guide::GuidanceMask> external;  // latent token dims
  bool shared_noise = true;
  toy::CodecKind codec = toy::CodecKind::Identity;
  std::uint64_t seed = 0;
};

struct IcaRecord {
  int step;
  double time;
  Grid raw;
  guide::GuidanceMask applied;
};

struct EditResult {
  Grid video;        // decoded edit
  Grid latent;       // Ẑ_0
  std::vector<DeltaFlowRecord> records;
  std::vector<IcaRecord> ica_log;
  Grid union_mask;   // pixel token grid (F, H, W); all ones when unmasked
  flow::CallStats calls;
};

/// Encode, reinforce the target embedding, run N CDFV steps with optional
/// ICA / external masks, decode. ER and ICA need an AttentionModel.
EditResult run_dfvedit(const Grid& source, ConditionId c0, ConditionId c1, flow::VelocityProvider& model,
                       const flow::Schedule& sched, const EditOptions& opt);

/// CSV: step,t,dv_l2,dv_maxabs,masked_fraction,model_calls,millis
void write_transcript(std::ostream& out, const std::vector<DeltaFlowRecord>& records, bool with_timing = true);

// --- control-term formulation ---------------------------------------------

/// (score_tgt - score_src) / σ(t).
Grid control_term(const flow::Schedule& sched, const Grid& score_tgt, const Grid& score_src, double t);

enum class ControlKind { Cdfv, ScoreDelta };
enum class Transition { Identity, DdsProjection };

struct ControlSpec {
  double lambda = 1.0;
  ControlKind kind = ControlKind::Cdfv;
  Transition transition = Transition::Identity;
  double eta = 1.0;  // step for the dds-projection transition
};

void validate(const ControlSpec& spec);

/// Canonical velocity plus control: v - λ (β/2) σ(t) C.
Grid controlled_velocity(const flow::Schedule& sched, const Grid& v, const Grid& control, double t, double lambda);

/// Edit step in control form. The control C compares the target score at
/// x̂ with the source score at x: from `scores` for ScoreDelta, from model
/// velocities for Cdfv. Identity transition:
///   Ẑ <- Ẑ - dt M ⊙ (-(β/2)(x̂ - x) - λ (β/2) σ C)
/// which with λ = 1 is the CDFV update. DdsProjection:
///   Ẑ <- Ẑ + η λ sqrt(1 - ᾱ) σ M ⊙ C,
/// i.e. Ẑ minus η times the noise-prediction difference.
StepResult controlled_step(const EditState& s, flow::VelocityProvider& model, const flow::ScoreProvider* scores,
                           const flow::Schedule& sched, ConditionId c0, ConditionId c1, const ControlSpec& spec,
                           const Grid* mask = nullptr);

/// Sampling under c0 with the control toward c1 at the same point:
/// C = (s_c1(x) - s_c0(x)) / σ. λ = 0 is plain sampling under c0.
flow::Trajectory controlled_sample(const flow::Schedule& sched, flow::VelocityProvider& model,
                                   const flow::ScoreProvider* scores, ConditionId c0, ConditionId c1, const Grid& zT,
                                   const ControlSpec& spec);

// --- baselines -------------------------------------------------------------

/// Δβ_t = σ(t_prev) - σ(t).
double delta_beta(double alpha_bar_prev, double alpha_bar_t);

/// g(a, b) = sqrt(ᾱ_prev / ᾱ_t) (a + Δβ b) with b = sqrt(ᾱ_t) ε: the DDIM
/// move from time t to time t_prev (either direction).
Grid ddim_transition(const Grid& x, const Grid& eps, double alpha_bar_t, double alpha_bar_prev);

struct InversionResult {
  Grid edited;
  Grid inverted;  // x_T after inversion under c0
};

/// DDIM inversion of the source under c0 to t = T, then DDIM sampling with
/// ε_edit = ε_c0 + λ (ε_c1 - ε_c0). vp-sde only.
InversionResult baseline_inversion_edit(const Grid& source, ConditionId c0, ConditionId c1,
                                        flow::VelocityProvider& model, const flow::Schedule& sched,
                                        double lambda = 1.0);

struct DdsResult {
  Grid edited;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<DeltaFlowRecord> records;  // one per iteration; step = iteration
};

/// z <- z - η (ε_c1(ẑ_t) - ε_c0(z0_t)) at a fresh uniform t in [0.02T, 0.98T]
/// and shared ε per iteration, until η ||Δ|| < tol or max_iters.
DdsResult baseline_dds_edit(const Grid& source, ConditionId c0, ConditionId c1, flow::VelocityProvider& model,
                            const flow::Schedule& sched, double eta, std::size_t max_iters, double tol,
                            const RngStream& rng);

/// CSV: iteration,t,dv_l2,dv_maxabs,masked_fraction,model_calls,millis
void write_dds_transcript(std::ostream& out, const DdsResult& r, bool with_timing = true);

}  // namespace dfv::edit
