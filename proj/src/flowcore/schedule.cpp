#include "dfv/flowcore/schedule.hpp"

#include <cmath>
#include <string>

#include "dfv/numcore/error.hpp"

namespace dfv::flow {

std::string_view to_string(Family f) {
  return f == Family::VpSde ? "vp-sde" : "flow-matching";
}

Family parse_family(std::string_view name) {
  if (name == "vp-sde") return Family::VpSde;
  if (name == "flow-matching") return Family::FlowMatching;
  fail(ErrorKind::Kind, "unknown schedule family '" + std::string(name) + "'");
}

Schedule::Schedule(ScheduleParams params) : p_(params) {
  if (!(p_.horizon > 0.0) || !std::isfinite(p_.horizon)) fail(ErrorKind::Parameter, "horizon must be positive");
  if (p_.steps < 1) fail(ErrorKind::Parameter, "steps must be at least 1");
  if (p_.family == Family::VpSde) {
    if (!(p_.beta_min >= 0.0) || !(p_.beta_max >= 0.0) || !std::isfinite(p_.beta_max)) {
      fail(ErrorKind::Parameter, "beta_min and beta_max must be non-negative");
    }
  }
}

double Schedule::time_at(int i) const {
  if (i < 0 || i > p_.steps) fail(ErrorKind::Index, "grid index out of range");
  return p_.horizon * i / p_.steps;
}

std::vector<double> Schedule::grid() const {
  std::vector<double> g;
  g.reserve(p_.steps + 1);
  for (int i = p_.steps; i >= 0; --i) g.push_back(time_at(i));
  return g;
}

void Schedule::check_time(double t) const {
  if (!(t >= 0.0 && t <= p_.horizon)) {
    fail(ErrorKind::Domain, "time " + std::to_string(t) + " outside [0, " + std::to_string(p_.horizon) + "]");
  }
}

double Schedule::beta(double t) const {
  check_time(t);
  if (p_.family != Family::VpSde) fail(ErrorKind::UnsupportedFamily, "beta(t) is defined for vp-sde only");
  return p_.beta_min + (p_.beta_max - p_.beta_min) * t / p_.horizon;
}

double Schedule::alpha_bar(double t) const {
  check_time(t);
  if (p_.family != Family::VpSde) fail(ErrorKind::UnsupportedFamily, "alpha_bar(t) is defined for vp-sde only");
  return std::exp(-(p_.beta_min * t + (p_.beta_max - p_.beta_min) * t * t / (2.0 * p_.horizon)));
}

double Schedule::sigma(double t) const {
  const double ab = alpha_bar(t);
  return std::sqrt((1.0 - ab) / ab);
}

double Schedule::signal_coef(double t) const {
  if (p_.family == Family::VpSde) return std::sqrt(alpha_bar(t));
  check_time(t);
  return 1.0 - t / p_.horizon;
}

double Schedule::noise_coef(double t) const {
  if (p_.family == Family::VpSde) return std::sqrt(1.0 - alpha_bar(t));
  check_time(t);
  return t / p_.horizon;
}

double alpha_bar(const Schedule& sched, double t) { return sched.alpha_bar(t); }

Grid forward_marginal(const Schedule& sched, const Grid& z0, double t, const Grid& eps) {
  if (!z0.same_shape(eps)) fail(ErrorKind::Shape, "forward_marginal: z0 and eps dims differ");
  sched.check_time(t);
  if (t == 0.0) return z0;
  if (sched.family() == Family::FlowMatching && t == sched.horizon()) return eps;
  return lincomb(sched.signal_coef(t), z0, sched.noise_coef(t), eps);
}

Grid velocity_from_score(const Schedule& sched, const Grid& x, double t, const Grid& score) {
  if (sched.family() != Family::VpSde) {
    fail(ErrorKind::UnsupportedFamily, "velocity_from_score needs a vp-sde schedule");
  }
  if (!x.same_shape(score)) fail(ErrorKind::Shape, "velocity_from_score: dims differ");
  const double half_beta = 0.5 * sched.beta(t);
  return lincomb(-half_beta, x, -half_beta, score);
}

Grid score_from_velocity(const Schedule& sched, const Grid& x, double t, const Grid& velocity) {
  if (sched.family() != Family::VpSde) {
    fail(ErrorKind::UnsupportedFamily, "score_from_velocity needs a vp-sde schedule");
  }
  if (!x.same_shape(velocity)) fail(ErrorKind::Shape, "score_from_velocity: dims differ");
  const double beta = sched.beta(t);
  if (!(beta > 0.0)) fail(ErrorKind::SingularTime, "score is not identifiable where beta(t) = 0");
  return lincomb(-1.0, x, -2.0 / beta, velocity);
}

Grid noise_from_velocity(const Schedule& sched, const Grid& x, double t, const Grid& velocity) {
  if (!x.same_shape(velocity)) fail(ErrorKind::Shape, "noise_from_velocity: dims differ");
  if (sched.family() == Family::VpSde) {
    const Grid score = score_from_velocity(sched, x, t, velocity);
    return scaled(score, -std::sqrt(1.0 - sched.alpha_bar(t)));
  }
  sched.check_time(t);
  const double s = t / sched.horizon();
  return lincomb(1.0, x, (1.0 - s) * sched.horizon(), velocity);
}

Grid velocity_from_noise(const Schedule& sched, const Grid& x, double t, const Grid& noise) {
  if (!x.same_shape(noise)) fail(ErrorKind::Shape, "velocity_from_noise: dims differ");
  if (sched.family() == Family::VpSde) {
    const double ab = sched.alpha_bar(t);
    if (!(ab < 1.0)) fail(ErrorKind::SingularTime, "noise prediction is undefined at alpha_bar = 1");
    const Grid score = scaled(noise, -1.0 / std::sqrt(1.0 - ab));
    return velocity_from_score(sched, x, t, score);
  }
  sched.check_time(t);
  const double T = sched.horizon();
  const double s = t / T;
  if (!(s < 1.0)) fail(ErrorKind::SingularTime, "clean estimate is undefined at t = T");
  // x0 = (x - s eps) / (1 - s); v = (eps - x0) / T
  Grid v = Grid::like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = (x[i] - s * noise[i]) / (1.0 - s);
    v[i] = (noise[i] - x0) / T;
  }
  return v;
}

}  // namespace dfv::flow
