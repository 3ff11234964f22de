#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv::flow {

/// Index into a model's fixed condition table (a prompt at desk scale).
struct ConditionId {
  int label = 0;
  friend bool operator==(ConditionId, ConditionId) = default;
};

struct BatchItem {
  std::reference_wrapper<const Grid> state;
  double time;
  ConditionId condition;
};

/// Counts of model evaluations; one call may carry several batch items.
struct CallStats {
  std::uint64_t calls = 0;
  std::uint64_t items = 0;
  std::map<std::size_t, std::uint64_t> calls_by_batch;

  friend bool operator==(const CallStats&, const CallStats&) = default;
};

/// Maps (noised latent, time, condition) to the probability-flow velocity
/// v_t(x_t) in the reverse-time convention x_{t - dt} = x_t - dt * v.
///
/// Every evaluation goes through evaluate_batch so the call counter sees it.
class VelocityProvider {
 public:
  virtual ~VelocityProvider() = default;

  Grid evaluate(const Grid& state, double time, ConditionId condition);
  std::vector<Grid> evaluate_batch(std::span<const BatchItem> items);

  /// Latent dims this provider accepts; empty means any shape.
  virtual Extents geometry() const { return {}; }
  virtual bool has_condition(ConditionId c) const = 0;

  const CallStats& stats() const noexcept { return stats_; }
  void reset_stats() noexcept { stats_ = {}; }

 protected:
  virtual std::vector<Grid> compute(std::span<const BatchItem> items) = 0;
  void record_call(std::size_t batch) noexcept;
  void check_items(std::span<const BatchItem> items) const;

 private:
  CallStats stats_;
};

/// Closed-form score of the noised marginal, for models that have one.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual Grid score(const Grid& state, double time, ConditionId condition) const = 0;
};

}  // namespace dfv::flow
