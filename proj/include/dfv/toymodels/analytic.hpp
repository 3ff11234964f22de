#pragma once

#include <vector>

#include "dfv/flowcore/provider.hpp"
#include "dfv/flowcore/schedule.hpp"

namespace dfv::toy {

using flow::ConditionId;

/// Conditional Gaussian data N(mu_c, I), one mean grid per condition label.
/// The noised marginal is Gaussian in closed form, so score and velocity are
/// exact; this is the oracle model for every flow and editing identity.
class AnalyticGaussianModel final : public flow::VelocityProvider, public flow::ScoreProvider {
 public:
  AnalyticGaussianModel(flow::Schedule sched, std::vector<Grid> means);

  const flow::Schedule& schedule() const noexcept { return sched_; }
  const Grid& mean(ConditionId c) const;
  std::size_t conditions() const noexcept { return means_.size(); }

  Extents geometry() const override { return means_.front().dims(); }
  bool has_condition(ConditionId c) const override;

  Grid score(const Grid& state, double time, ConditionId c) const override;

  /// Mean and per-coordinate variance of the noised marginal at `time`.
  Grid marginal_mean(double time, ConditionId c) const;
  double marginal_variance(double time) const;

  double log_density(const Grid& state, double time, ConditionId c) const;

 protected:
  std::vector<Grid> compute(std::span<const flow::BatchItem> items) override;

 private:
  Grid velocity(const Grid& state, double time, ConditionId c) const;

  flow::Schedule sched_;
  std::vector<Grid> means_;
};

/// Exact score of the noised conditional Gaussian: -(x - m_t) / var_t.
Grid analytic_score(const AnalyticGaussianModel& model, const flow::Schedule& sched, const Grid& x, double t,
                    ConditionId c);

}  // namespace dfv::toy
