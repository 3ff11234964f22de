#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "dfv/flowcore/provider.hpp"
#include "dfv/toymodels/dataset.hpp"

namespace dfv::toy {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class AttentionBlock { EE, EB, BE, BB };

/// Full softmax attention over the concatenation [E; B] of N text tokens and
/// M latent tokens, captured at one layer and time. Token order in B is the
/// row-major order of the (F, H, W) token grid.
class AttentionSnapshot {
 public:
  /// Validates that `full` is square of side N + M, non-negative and
  /// row-stochastic within 1e-6, and that M matches the token geometry.
  AttentionSnapshot(int layer, double time, std::size_t text_tokens, Extents token_dims, Matrix full);

  int layer() const noexcept { return layer_; }
  double time() const noexcept { return time_; }
  std::size_t text_tokens() const noexcept { return n_; }
  std::size_t latent_tokens() const noexcept { return static_cast<std::size_t>(full_.rows()) - n_; }
  const Extents& token_dims() const noexcept { return token_dims_; }
  const Matrix& full() const noexcept { return full_; }

  /// Copy of one block: EE is N x N, EB is N x M, BE is M x N, BB is M x M.
  Matrix block(AttentionBlock which) const;

  /// Largest |row sum - 1| over the full matrix.
  double row_sum_error() const;

 private:
  int layer_;
  double time_;
  std::size_t n_;
  Extents token_dims_;
  Matrix full_;
};

/// Inverse of the block partition.
Matrix assemble_blocks(const Matrix& ee, const Matrix& eb, const Matrix& be, const Matrix& bb);

struct AttentionQuery {
  std::reference_wrapper<const Grid> state;
  double time;
  std::reference_wrapper<const Grid> embedding;  // (N, d) text rows
  bool capture = true;  // false: no snapshots for this item
};

struct AttentionOutput {
  Grid velocity;
  std::vector<AttentionSnapshot> snapshots;  // one per requested capture layer
};

/// A velocity model whose condition enters as N text-embedding rows that
/// share full attention with the latent tokens. Besides plain evaluation by
/// condition label it accepts explicit (e.g. reinforced) embedding rows and
/// can return attention snapshots; both count as model calls.
class AttentionModel : public flow::VelocityProvider {
 public:
  virtual std::size_t text_tokens() const = 0;
  virtual std::size_t embed_width() const = 0;
  virtual std::size_t layers() const = 0;
  virtual Grid condition_embedding(flow::ConditionId c) const = 0;

  std::vector<AttentionOutput> evaluate_attention(std::span<const AttentionQuery> batch,
                                                  std::span<const int> capture_layers);

 protected:
  virtual std::vector<AttentionOutput> compute_attention(std::span<const AttentionQuery> batch,
                                                         std::span<const int> capture_layers) = 0;
  std::vector<Grid> compute(std::span<const flow::BatchItem> items) override;
};

}  // namespace dfv::toy
