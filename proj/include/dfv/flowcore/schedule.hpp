#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dfv/numcore/grid.hpp"

namespace dfv::flow {

enum class Family { VpSde, FlowMatching };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

struct ScheduleParams {
  Family family = Family::VpSde;
  double beta_min = 0.1;  // per unit time
  double beta_max = 20.0;
  double horizon = 1.0;
  int steps = 50;

  friend bool operator==(const ScheduleParams&, const ScheduleParams&) = default;
};

/// Noise schedule over continuous time t in [0, T] (t = 0 clean, t = T noise)
/// with a uniform grid of `steps` intervals.
///
/// vp-sde: beta(t) linear from beta_min to beta_max, alpha_bar(t) =
/// exp(-int_0^t beta), sigma(t) = sqrt((1 - alpha_bar) / alpha_bar).
/// flow-matching: x_t = (1 - t/T) x_0 + (t/T) eps.
class Schedule {
 public:
  Schedule() : Schedule(ScheduleParams{}) {}
  explicit Schedule(ScheduleParams params);

  const ScheduleParams& params() const noexcept { return p_; }
  Family family() const noexcept { return p_.family; }
  double horizon() const noexcept { return p_.horizon; }
  int steps() const noexcept { return p_.steps; }
  double dt() const noexcept { return p_.horizon / p_.steps; }

  /// Grid time t_i = T * i / N for i in [0, N].
  double time_at(int i) const;
  /// Descending grid t_N = T, ..., t_0 = 0.
  std::vector<double> grid() const;

  double beta(double t) const;
  double alpha_bar(double t) const;
  double sigma(double t) const;

  /// Coefficients of the forward marginal x_t = signal(t) z0 + noise(t) eps.
  double signal_coef(double t) const;
  double noise_coef(double t) const;

  void check_time(double t) const;

 private:
  ScheduleParams p_;
};

double alpha_bar(const Schedule& sched, double t);

/// The flow map applied with explicit noise: signal(t) z0 + noise(t) eps.
Grid forward_marginal(const Schedule& sched, const Grid& z0, double t, const Grid& eps);

/// Probability-flow velocity of the VP SDE: -(beta/2) x - (beta/2) score.
Grid velocity_from_score(const Schedule& sched, const Grid& x, double t, const Grid& score);

/// Inverse of velocity_from_score; needs beta(t) > 0.
Grid score_from_velocity(const Schedule& sched, const Grid& x, double t, const Grid& velocity);

/// Posterior-mean noise E[eps | x_t] implied by a velocity prediction.
Grid noise_from_velocity(const Schedule& sched, const Grid& x, double t, const Grid& velocity);

/// Velocity implied by a noise prediction; inverse of noise_from_velocity.
Grid velocity_from_noise(const Schedule& sched, const Grid& x, double t, const Grid& noise);

}  // namespace dfv::flow
