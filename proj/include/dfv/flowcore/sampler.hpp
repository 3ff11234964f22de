#pragma once

#include <vector>

#include "dfv/flowcore/provider.hpp"
#include "dfv/flowcore/schedule.hpp"
#include "dfv/numcore/rng.hpp"

namespace dfv::flow {

struct FlowSample {
  Grid state;
  double time = 0.0;
};

/// Reverse-time Euler step: state - dt * v at time - dt. The result time
/// must stay in [0, horizon].
FlowSample euler_step(const FlowSample& sample, const Grid& velocity, double dt, double horizon);

/// A discrete reverse trajectory. samples[0] is (zT, T), samples[N] is the
/// endpoint at t = 0; velocities[i] drove samples[i] -> samples[i + 1].
struct Trajectory {
  std::vector<FlowSample> samples;
  std::vector<Grid> velocities;
  std::vector<double> step_sizes;

  const Grid& endpoint() const { return samples.back().state; }
  /// zT - sum_i dt_i * v_i, accumulated independently of the trajectory.
  Grid riemann_endpoint() const;
};

/// Deterministic Euler integration of the probability-flow ODE from T to 0.
Trajectory sample_pf_ode(const Schedule& sched, VelocityProvider& model, ConditionId cond, const Grid& zT);

/// Euler-Maruyama integration of the reverse VP SDE, drift v - (beta/2) score,
/// diffusion sqrt(beta). Step i draws its noise at call index i of `rng`.
Trajectory sample_sde(const Schedule& sched, VelocityProvider& model, ConditionId cond, const Grid& zT,
                      const RngStream& rng);

}  // namespace dfv::flow
