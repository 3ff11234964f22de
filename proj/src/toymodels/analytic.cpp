#include "dfv/toymodels/analytic.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::toy {

AnalyticGaussianModel::AnalyticGaussianModel(flow::Schedule sched, std::vector<Grid> means)
    : sched_(sched), means_(std::move(means)) {
  if (means_.empty()) fail(ErrorKind::Parameter, "analytic model needs at least one condition mean");
  for (const auto& m : means_) {
    if (!m.same_shape(means_.front())) fail(ErrorKind::Shape, "condition means must share dims");
    if (!all_finite(m)) fail(ErrorKind::Domain, "condition mean is not finite");
  }
}

bool AnalyticGaussianModel::has_condition(ConditionId c) const {
  return c.label >= 0 && static_cast<std::size_t>(c.label) < means_.size();
}

const Grid& AnalyticGaussianModel::mean(ConditionId c) const {
  if (!has_condition(c)) fail(ErrorKind::Condition, "unknown condition label " + std::to_string(c.label));
  return means_[static_cast<std::size_t>(c.label)];
}

Grid AnalyticGaussianModel::marginal_mean(double time, ConditionId c) const {
  return scaled(mean(c), sched_.signal_coef(time));
}

double AnalyticGaussianModel::marginal_variance(double time) const {
  // alpha_bar + (1 - alpha_bar) is exactly one; summing the squared
  // coefficients would round and leak a tiny field out of N(0, I).
  if (sched_.family() == flow::Family::VpSde) return 1.0;
  const double a = sched_.signal_coef(time);
  const double b = sched_.noise_coef(time);
  return a * a + b * b;
}

Grid AnalyticGaussianModel::score(const Grid& state, double time, ConditionId c) const {
  const Grid m = marginal_mean(time, c);
  if (!state.same_shape(m)) fail(ErrorKind::Shape, "state dims do not match the model");
  const double var = marginal_variance(time);
  return lincomb(-1.0 / var, state, 1.0 / var, m);
}

double AnalyticGaussianModel::log_density(const Grid& state, double time, ConditionId c) const {
  const Grid m = marginal_mean(time, c);
  const double var = marginal_variance(time);
  double sq = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) sq += (state[i] - m[i]) * (state[i] - m[i]);
  return -0.5 * sq / var - 0.5 * static_cast<double>(state.size()) * std::log(2.0 * std::numbers::pi * var);
}

Grid AnalyticGaussianModel::velocity(const Grid& state, double time, ConditionId c) const {
  if (sched_.family() == flow::Family::VpSde) {
    return flow::velocity_from_score(sched_, state, time, score(state, time, c));
  }
  // x = a x0 + b eps with a = 1 - s, b = s. Posterior means of x0 and eps
  // given x, then v = (E[eps] - E[x0]) / T.
  const double a = sched_.signal_coef(time);
  const double b = sched_.noise_coef(time);
  const double var = a * a + b * b;
  const Grid& mu = mean(c);
  Grid v = Grid::like(state);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double resid = state[i] - a * mu[i];
    const double x0 = mu[i] + a / var * resid;
    const double eps = b / var * resid;
    v[i] = (eps - x0) / sched_.horizon();
  }
  return v;
}

std::vector<Grid> AnalyticGaussianModel::compute(std::span<const flow::BatchItem> items) {
  std::vector<Grid> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(velocity(item.state.get(), item.time, item.condition));
  return out;
}

Grid analytic_score(const AnalyticGaussianModel& model, const flow::Schedule& sched, const Grid& x, double t,
                    ConditionId c) {
  if (!(sched.params() == model.schedule().params())) {
    fail(ErrorKind::Parameter, "analytic_score: schedule differs from the model's schedule");
  }
  return model.score(x, t, c);
}

}  // namespace dfv::toy
