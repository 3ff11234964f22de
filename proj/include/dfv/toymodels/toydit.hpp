#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dfv/flowcore/schedule.hpp"
#include "dfv/numcore/rng.hpp"
#include "dfv/toymodels/attention.hpp"
#include "dfv/toymodels/dataset.hpp"

namespace dfv::toy {

struct ToyDiTConfig {
  ClipGeometry geometry;
  std::size_t width = 32;        // token embedding width d
  std::size_t blocks = 2;
  std::size_t text_tokens = 2;   // rows per condition
  std::size_t conditions = 3;    // square, disc, two-object
  std::size_t mlp_hidden = 64;
  flow::Family family = flow::Family::FlowMatching;
  double horizon = 1.0;

  friend bool operator==(const ToyDiTConfig&, const ToyDiTConfig&) = default;
};

struct BlockWeights {
  Matrix wq, wk, wv, wo;  // d x d
  Matrix w1, b1;          // d x h, 1 x h
  Matrix w2, b2;          // h x d, 1 x d
};

struct ToyDiTWeights {
  Matrix embed;           // (conditions * N) x d
  Matrix w_in, b_in;      // D x d, 1 x d
  Matrix w_time, b_time;  // d x d, 1 x d
  Matrix w_pool;          // d x d, mean text row into the time embedding
  std::vector<BlockWeights> blocks;
  Matrix w_out, b_out;    // d x D, 1 x D

  /// Visits every parameter with a stable name, in a fixed order.
  template <class F>
  void for_each(F&& f) {
    f("embed", embed);
    f("w_in", w_in);
    f("b_in", b_in);
    f("w_time", w_time);
    f("b_time", b_time);
    f("w_pool", w_pool);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "block" + std::to_string(i) + ".";
      auto& b = blocks[i];
      f(p + "wq", b.wq);
      f(p + "wk", b.wk);
      f(p + "wv", b.wv);
      f(p + "wo", b.wo);
      f(p + "w1", b.w1);
      f(p + "b1", b.b1);
      f(p + "w2", b.w2);
      f(p + "b2", b.b2);
    }
    f("w_out", w_out);
    f("b_out", b_out);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<ToyDiTWeights*>(this)->for_each([&](const std::string& n, Matrix& m) { f(n, std::as_const(m)); });
  }

  /// Same shapes, all zero.
  ToyDiTWeights zeros_like() const;
};

/// Tiny full-attention diffusion transformer. Text rows E (N x d) and latent
/// tokens B (one per (f, h, w) cell) attend jointly; each block is
///   H += softmax(Q K^T / sqrt(d)) V Wo,   H += relu(H W1 + b1) W2 + b2
/// with no normalisation layers, so scaling an embedding row scales its
/// pre-softmax key logits by the same factor in the first block. The head
/// reads the latent rows and is zero-initialised.
class ToyDiT final : public AttentionModel {
 public:
  ToyDiT(const ToyDiTConfig& cfg, const RngStream& init);
  ToyDiT(const ToyDiTConfig& cfg, ToyDiTWeights weights);

  const ToyDiTConfig& config() const noexcept { return cfg_; }
  const ToyDiTWeights& weights() const noexcept { return w_; }
  ToyDiTWeights& weights() noexcept { return w_; }

  Extents geometry() const override { return cfg_.geometry.dims(); }
  bool has_condition(flow::ConditionId c) const override;
  std::size_t text_tokens() const override { return cfg_.text_tokens; }
  std::size_t embed_width() const override { return cfg_.width; }
  std::size_t layers() const override { return cfg_.blocks; }
  Grid condition_embedding(flow::ConditionId c) const override;

  /// Squared-error loss mean((v(x, t, c) - target)^2) and, if `grad` is
  /// non-null, its gradient added into `grad`. Does not count as a call.
  double loss_and_gradient(const Grid& x, double t, flow::ConditionId c, const Grid& target,
                           ToyDiTWeights* grad) const;

 protected:
  std::vector<AttentionOutput> compute_attention(std::span<const AttentionQuery> batch,
                                                 std::span<const int> capture_layers) override;

 private:
  struct Cache;
  Matrix forward(const Grid& x, double t, const Matrix& text, Cache* cache,
                 std::span<const int> capture, std::vector<AttentionSnapshot>* snaps) const;

  ToyDiTConfig cfg_;
  ToyDiTWeights w_;
  Matrix pos_;  // fixed positional encoding, M x d
};

struct TrainOptions {
  std::size_t epochs = 200;
  double lr = 2e-3;
  std::size_t batch = 4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double t_min = 1e-3;             // lower time bound for vp-sde targets
  std::size_t probe_every = 10;    // epochs between probe-loss evaluations
  std::size_t probe_items = 8;
};

struct LossPoint {
  std::size_t epoch;
  double train_loss;  // mean over the epoch; NaN for the initial point
  double probe_loss;  // fixed (clip, t, eps) probe set
};

struct TrainReport {
  std::vector<LossPoint> curve;
  double baseline_probe_loss = 0.0;
  double final_probe_loss = 0.0;
};

/// Regression target for a clean clip: the schedule's velocity of the
/// forward_marginal pair (x0, eps) at time t.
Grid velocity_target(const flow::Schedule& sched, const Grid& x0, const Grid& eps, double t);

/// Adam on the conditional regression loss with fresh (t, eps) per sample.
TrainReport train_toydit(ToyDiT& model, const std::vector<ToyClip>& data, const flow::Schedule& sched,
                         const TrainOptions& opt, const RngStream& rng);

/// Checkpoint directory: manifest.txt (key=value) and one DFVT file per
/// parameter. Files store float32, so a reload rounds the weights.
void save_checkpoint(const ToyDiT& model, const std::filesystem::path& dir);
ToyDiT load_checkpoint(const std::filesystem::path& dir);

}  // namespace dfv::toy
