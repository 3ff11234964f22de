#include "dfv/toymodels/attention.hpp"

#include <cmath>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::toy {

AttentionSnapshot::AttentionSnapshot(int layer, double time, std::size_t text_tokens, Extents token_dims,
                                     Matrix full)
    : layer_(layer), time_(time), n_(text_tokens), token_dims_(std::move(token_dims)), full_(std::move(full)) {
  if (full_.rows() != full_.cols()) fail(ErrorKind::Shape, "attention matrix must be square");
  const auto side = static_cast<std::size_t>(full_.rows());
  if (side <= n_) fail(ErrorKind::Shape, "attention matrix has no latent tokens");
  if (checked_volume(token_dims_) != side - n_) fail(ErrorKind::Shape, "latent token count does not match geometry");
  // A NaN or infinite weight makes its row sum non-finite, so two vectorised
  // passes cover all three checks.
  const Eigen::VectorXd sums = full_.rowwise().sum();
  if (!sums.allFinite() || full_.minCoeff() < 0.0) fail(ErrorKind::Domain, "attention weights must be finite and >= 0");
  if ((sums.array() - 1.0).abs().maxCoeff() > 1e-6) fail(ErrorKind::Domain, "attention rows must sum to 1");
}

Matrix AttentionSnapshot::block(AttentionBlock which) const {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto m = static_cast<Eigen::Index>(latent_tokens());
  switch (which) {
    case AttentionBlock::EE: return full_.topLeftCorner(n, n);
    case AttentionBlock::EB: return full_.topRightCorner(n, m);
    case AttentionBlock::BE: return full_.bottomLeftCorner(m, n);
    case AttentionBlock::BB: return full_.bottomRightCorner(m, m);
  }
  fail(ErrorKind::Kind, "unknown attention block");
}

double AttentionSnapshot::row_sum_error() const {
  return (full_.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

Matrix assemble_blocks(const Matrix& ee, const Matrix& eb, const Matrix& be, const Matrix& bb) {
  if (ee.rows() != ee.cols() || bb.rows() != bb.cols() || eb.rows() != ee.rows() || eb.cols() != bb.cols() ||
      be.rows() != bb.rows() || be.cols() != ee.cols()) {
    fail(ErrorKind::Shape, "attention blocks do not tile a square matrix");
  }
  Matrix full(ee.rows() + bb.rows(), ee.cols() + bb.cols());
  full << ee, eb, be, bb;
  return full;
}

std::vector<AttentionOutput> AttentionModel::evaluate_attention(std::span<const AttentionQuery> batch,
                                                                std::span<const int> capture_layers) {
  if (batch.empty()) fail(ErrorKind::Parameter, "empty evaluation batch");
  const Extents geom = geometry();
  for (const auto& q : batch) {
    if (!geom.empty() && q.state.get().dims() != geom) fail(ErrorKind::Shape, "latent dims do not match the model geometry");
    const Extents want{text_tokens(), embed_width()};
    if (q.embedding.get().dims() != want) fail(ErrorKind::Shape, "embedding rows must be (N, d)");
    if (!all_finite(q.embedding.get())) fail(ErrorKind::Domain, "embedding rows are not finite");
  }
  for (int layer : capture_layers) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers()) {
      fail(ErrorKind::Layer, "capture layer " + std::to_string(layer) + " out of range");
    }
  }
  record_call(batch.size());
  auto out = compute_attention(batch, capture_layers);
  if (out.size() != batch.size()) fail(ErrorKind::Data, "model returned a wrong batch size");
  return out;
}

std::vector<Grid> AttentionModel::compute(std::span<const flow::BatchItem> items) {
  std::vector<Grid> rows;
  rows.reserve(items.size());
  for (const auto& it : items) rows.push_back(condition_embedding(it.condition));
  std::vector<AttentionQuery> qs;
  qs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) qs.push_back({items[i].state, items[i].time, rows[i]});
  auto outs = compute_attention(qs, {});
  std::vector<Grid> v;
  v.reserve(outs.size());
  for (auto& o : outs) v.push_back(std::move(o.velocity));
  return v;
}

}  // namespace dfv::toy
