#include "dfv/flowcore/sampler.hpp"

#include <cmath>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::flow {

FlowSample euler_step(const FlowSample& sample, const Grid& velocity, double dt, double horizon) {
  if (!sample.state.same_shape(velocity)) fail(ErrorKind::Shape, "euler_step: state and velocity dims differ");
  double next = sample.time - dt;
  // Absorb rounding of repeated subtraction at the interval ends.
  const double slack = 1e-12 * horizon;
  if (next < 0.0 && next > -slack) next = 0.0;
  if (next > horizon && next < horizon + slack) next = horizon;
  if (!(next >= 0.0 && next <= horizon)) {
    fail(ErrorKind::Domain, "euler_step leaves [0, T]: time " + std::to_string(next));
  }
  if (dt == 0.0) return {sample.state, next};
  return {elementwise(sample.state, velocity, ElementOp::Sub, dt), next};
}

Grid Trajectory::riemann_endpoint() const {
  Grid acc = Grid::like(samples.front().state);
  for (std::size_t i = 0; i < velocities.size(); ++i) {
    acc = elementwise(acc, velocities[i], ElementOp::Add, step_sizes[i]);
  }
  return elementwise(samples.front().state, acc, ElementOp::Sub, 1.0);
}

namespace {

Trajectory start(const Schedule& sched, const Grid& zT) {
  if (!all_finite(zT)) fail(ErrorKind::Domain, "initial state is not finite");
  Trajectory traj;
  traj.samples.reserve(sched.steps() + 1);
  traj.velocities.reserve(sched.steps());
  traj.step_sizes.reserve(sched.steps());
  traj.samples.push_back({zT, sched.horizon()});
  return traj;
}

}  // namespace

Trajectory sample_pf_ode(const Schedule& sched, VelocityProvider& model, ConditionId cond, const Grid& zT) {
  Trajectory traj = start(sched, zT);
  for (int i = sched.steps(); i >= 1; --i) {
    const FlowSample& cur = traj.samples.back();
    const double dt = cur.time - sched.time_at(i - 1);
    Grid v = model.evaluate(cur.state, cur.time, cond);
    FlowSample next = euler_step(cur, v, dt, sched.horizon());
    next.time = sched.time_at(i - 1);
    traj.velocities.push_back(std::move(v));
    traj.step_sizes.push_back(dt);
    traj.samples.push_back(std::move(next));
  }
  return traj;
}

Trajectory sample_sde(const Schedule& sched, VelocityProvider& model, ConditionId cond, const Grid& zT,
                      const RngStream& rng) {
  if (sched.family() != Family::VpSde) fail(ErrorKind::UnsupportedFamily, "sample_sde integrates the VP SDE");
  Trajectory traj = start(sched, zT);
  for (int i = sched.steps(); i >= 1; --i) {
    const FlowSample& cur = traj.samples.back();
    const double dt = cur.time - sched.time_at(i - 1);
    const double beta = sched.beta(cur.time);
    Grid v = model.evaluate(cur.state, cur.time, cond);

    // Reverse drift v - (beta/2) score, with -(beta/2) score = v + (beta/2) x.
    // Where beta = 0 the score term vanishes and the step is the ODE step.
    Grid drift = v;
    if (beta > 0.0) {
      const Grid correction = lincomb(1.0, v, 0.5 * beta, cur.state);
      drift = elementwise(v, correction, ElementOp::Add, 1.0);
    }
    FlowSample next = euler_step(cur, drift, dt, sched.horizon());
    if (beta > 0.0) {
      const Grid noise = rng.gaussian_at(static_cast<std::uint64_t>(i), cur.state.dims());
      next.state = elementwise(next.state, noise, ElementOp::Add, std::sqrt(beta * dt));
    }
    next.time = sched.time_at(i - 1);
    traj.velocities.push_back(std::move(drift));
    traj.step_sizes.push_back(dt);
    traj.samples.push_back(std::move(next));
  }
  return traj;
}

}  // namespace dfv::flow
