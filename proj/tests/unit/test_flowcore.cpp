#include <cmath>

#include "doctest.h"
#include "dfv/flowcore/sampler.hpp"
#include "dfv/flowcore/schedule.hpp"
#include "dfv/numcore/error.hpp"
#include "dfv/toymodels/analytic.hpp"

using namespace dfv;
using namespace dfv::flow;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected dfv::Error");
  return ErrorKind::Io;
}

Grid scalar(double v) { return Grid({1}, std::vector<double>{v}); }

Schedule constant_beta(double beta, int steps = 50) {
  return Schedule({Family::VpSde, beta, beta, 1.0, steps});
}

// Velocity that ignores its input.
class ConstantField final : public VelocityProvider {
 public:
  explicit ConstantField(Grid v) : v_(std::move(v)) {}
  bool has_condition(ConditionId) const override { return true; }

 protected:
  std::vector<Grid> compute(std::span<const BatchItem> items) override {
    return std::vector<Grid>(items.size(), v_);
  }

 private:
  Grid v_;
};

}  // namespace

TEST_CASE("alpha_bar closed form") {
  const Schedule s;
  CHECK(alpha_bar(s, 0.0) == 1.0);
  CHECK(alpha_bar(s, 1.0) == doctest::Approx(std::exp(-10.05)).epsilon(1e-12));
  CHECK(alpha_bar(s, 1.0) == doctest::Approx(4.32e-5).epsilon(1e-3));
  CHECK(alpha_bar(s, 1.0) < 1e-4);
  CHECK(kind_of([&] { alpha_bar(s, -0.1); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { alpha_bar(s, 1.5); }) == ErrorKind::Domain);
}

TEST_CASE("schedule is monotone on its grid") {
  const Schedule s({Family::VpSde, 0.1, 20.0, 1.0, 200});
  const auto g = s.grid();
  REQUIRE(g.size() == 201);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 0.0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    CHECK(s.alpha_bar(g[i]) < s.alpha_bar(g[i + 1]));
    CHECK(s.sigma(g[i]) > s.sigma(g[i + 1]));
    CHECK(s.beta(g[i]) > 0.0);
  }
  const Schedule fm({Family::FlowMatching, 0, 0, 2.0, 10});
  CHECK(fm.signal_coef(0.5) == 0.75);
  CHECK(fm.noise_coef(0.5) == 0.25);
}

TEST_CASE("invalid schedules are rejected") {
  CHECK(kind_of([] { Schedule({Family::VpSde, 0.1, 20, 0.0, 50}); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { Schedule({Family::VpSde, 0.1, 20, 1.0, 0}); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { Schedule({Family::VpSde, -1, 20, 1.0, 5}); }) == ErrorKind::Parameter);
  CHECK(kind_of([] { parse_family("ddpm"); }) == ErrorKind::Kind);
}

TEST_CASE("forward_marginal examples") {
  const Schedule vp;
  const Schedule fm({Family::FlowMatching, 0, 0, 1.0, 50});
  const Grid z0 = RngStream(1).gaussian_at(0, {3, 4});
  const Grid eps = RngStream(1).gaussian_at(1, {3, 4});

  CHECK(bit_equal(forward_marginal(vp, z0, 0.0, eps), z0));
  CHECK(bit_equal(forward_marginal(fm, z0, 0.0, eps), z0));
  CHECK(bit_equal(forward_marginal(fm, z0, 1.0, eps), eps));

  // alpha_bar(t) = 0.25 with a constant beta: t = ln(4) / beta.
  const Schedule c = constant_beta(2.0);
  const double t = std::log(4.0) / 2.0;
  CHECK(c.alpha_bar(t) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(forward_marginal(c, scalar(1.0), t, scalar(0.0))[0] == doctest::Approx(0.5).epsilon(1e-14));

  CHECK(kind_of([&] { forward_marginal(vp, z0, 0.5, Grid({4, 3})); }) == ErrorKind::Shape);
}

TEST_CASE("velocity_from_score examples") {
  const Schedule vp;
  const Grid x = RngStream(2).gaussian_at(0, {5});
  const Grid v = velocity_from_score(vp, x, 0.7, scaled(x, -1.0));
  CHECK(reduce_norm(v, NormKind::MaxAbs) == 0.0);

  CHECK(velocity_from_score(constant_beta(1.0), scalar(2.0), 0.3, scalar(0.0))[0] == -1.0);
  CHECK(velocity_from_score(constant_beta(0.5), scalar(0.0), 0.3, scalar(4.0))[0] == -1.0);

  const Schedule fm({Family::FlowMatching, 0, 0, 1.0, 50});
  CHECK(kind_of([&] { velocity_from_score(fm, x, 0.5, x); }) == ErrorKind::UnsupportedFamily);
}

TEST_CASE("score, noise and velocity conversions invert each other") {
  const Grid x = RngStream(3).gaussian_at(0, {16});
  const Grid v = RngStream(3).gaussian_at(1, {16});
  for (Family fam : {Family::VpSde, Family::FlowMatching}) {
    const Schedule s({fam, 0.1, 20.0, 1.0, 50});
    for (double t : {0.1, 0.5, 0.9}) {
      const Grid eps = noise_from_velocity(s, x, t, v);
      const Grid back = velocity_from_noise(s, x, t, eps);
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == doctest::Approx(v[i]).epsilon(1e-10));
    }
  }
  const Schedule vp;
  const Grid score = score_from_velocity(vp, x, 0.4, v);
  const Grid v2 = velocity_from_score(vp, x, 0.4, score);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(v2[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("euler_step examples") {
  const FlowSample fs{scalar(1.0), 0.5};
  const FlowSample same = euler_step(fs, scalar(2.0), 0.0, 1.0);
  CHECK(bit_equal(same.state, fs.state));
  CHECK(same.time == 0.5);

  const FlowSample next = euler_step(fs, scalar(2.0), 0.25, 1.0);
  CHECK(next.state[0] == 0.5);
  CHECK(next.time == 0.25);

  CHECK(kind_of([&] { euler_step(fs, scalar(1.0), 0.75, 1.0); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { euler_step(fs, scalar(1.0), -0.75, 1.0); }) == ErrorKind::Domain);
}

TEST_CASE("constant field integrates to -T c") {
  const int n = 64;
  const double c = 0.3;
  FlowSample fs{Grid({2}, 1.0), 1.0};
  for (int i = 0; i < n; ++i) fs = euler_step(fs, Grid({2}, c), 1.0 / n, 1.0);
  CHECK(fs.time == doctest::Approx(0.0));
  CHECK(std::abs(fs.state[0] - (1.0 - c)) < 1e-12);
}

TEST_CASE("sample_pf_ode under a zero field returns zT bit-exactly") {
  const Schedule s;
  toy::AnalyticGaussianModel standard(s, {Grid({4, 4})});
  const Grid zT = RngStream(4).gaussian_at(0, {4, 4});
  const Trajectory traj = sample_pf_ode(s, standard, {0}, zT);
  CHECK(traj.samples.size() == 51);
  CHECK(traj.velocities.size() == 50);
  CHECK(bit_equal(traj.endpoint(), zT));
  CHECK(traj.samples.back().time == 0.0);
  CHECK(standard.stats().calls == 50);
  CHECK(standard.stats().calls_by_batch.at(1) == 50);
}

TEST_CASE("pf-ode endpoint equals zT minus the recorded Riemann sum") {
  const Schedule s({Family::VpSde, 0.1, 20.0, 1.0, 80});
  toy::AnalyticGaussianModel model(s, {RngStream(5).gaussian_at(0, {6})});
  const Grid zT = RngStream(5).gaussian_at(1, {6});
  const Trajectory traj = sample_pf_ode(s, model, {0}, zT);
  const Grid diff = elementwise(traj.endpoint(), traj.riemann_endpoint(), ElementOp::Sub);
  CHECK(reduce_norm(diff, NormKind::MaxAbs) < 1e-13);
}

TEST_CASE("pf-ode of N(2, 1) data transports N(0, 1) noise to mean ~2") {
  // Each entry of a 1e4 grid is an independent 1-D chain under the analytic
  // model, which acts elementwise.
  const Schedule s({Family::VpSde, 0.1, 20.0, 1.0, 500});
  toy::AnalyticGaussianModel model(s, {Grid({10000}, 2.0)});
  const Grid zT = RngStream(6).gaussian_at(0, {10000});
  const Trajectory traj = sample_pf_ode(s, model, {0}, zT);
  const double expected = 2.0 * (1.0 - std::sqrt(s.alpha_bar(1.0)));
  const double mean = reduce_norm(traj.endpoint(), NormKind::Mean);
  CHECK(std::abs(mean - expected) < 0.03 * expected);

  const Trajectory again = sample_pf_ode(s, model, {0}, zT);
  CHECK(bit_equal(again.endpoint(), traj.endpoint()));
}

TEST_CASE("noising then pf-ode is first-order accurate") {
  // Unit-variance Gaussian data: the exact flow from x_t back to 0 adds
  // mu (1 - sqrt(alpha_bar(t))). Start mid-way so the first-order term
  // dominates the error at these step counts.
  const double mu = 1.5;
  double errors[2];
  for (int k = 0; k < 2; ++k) {
    const int steps = 50 << k;
    const Schedule full({Family::VpSde, 0.1, 20.0, 1.0, 2 * steps});
    toy::AnalyticGaussianModel model(full, {Grid({3}, mu)});
    const Grid z0 = RngStream(7).gaussian_at(0, {3});
    const double t0 = 0.5;
    const Grid xt = forward_marginal(full, z0, t0, RngStream(7).gaussian_at(1, {3}));
    FlowSample fs{xt, t0};
    for (int i = steps; i >= 1; --i) {
      const Grid v = model.evaluate(fs.state, fs.time, {0});
      fs = euler_step(fs, v, fs.time - full.time_at(i - 1), 1.0);
    }
    const double exact = xt[0] + mu * (1.0 - std::sqrt(full.alpha_bar(t0)));
    errors[k] = std::abs(fs.state[0] - exact);
  }
  CHECK(errors[0] < 0.05);
  CHECK(errors[0] / errors[1] >= 1.8);
}

TEST_CASE("sample_sde with beta == 0 reduces to the ode") {
  const Schedule flat = constant_beta(0.0, 20);
  ConstantField field(Grid({3}, 0.25));
  const Grid zT = RngStream(8).gaussian_at(0, {3});
  const Trajectory ode = sample_pf_ode(flat, field, {0}, zT);
  const Trajectory sde = sample_sde(flat, field, {0}, zT, RngStream(9));
  CHECK(bit_equal(ode.endpoint(), sde.endpoint()));
}

TEST_CASE("sample_sde keeps N(0, 1) stationary and replays by seed") {
  const Schedule s({Family::VpSde, 0.1, 20.0, 1.0, 500});
  toy::AnalyticGaussianModel model(s, {Grid({10000})});
  const Grid zT = RngStream(10).gaussian_at(0, {10000});
  const Trajectory traj = sample_sde(s, model, {0}, zT, RngStream(11));
  const Grid& end = traj.endpoint();
  const double mean = reduce_norm(end, NormKind::Mean);
  double var = 0.0;
  for (double v : end.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(end.size() - 1);
  CHECK(std::abs(var - 1.0) < 0.05);

  const Trajectory replay = sample_sde(s, model, {0}, zT, RngStream(11));
  CHECK(bit_equal(replay.endpoint(), end));
  const Trajectory other = sample_sde(s, model, {0}, zT, RngStream(12));
  CHECK_FALSE(other.endpoint() == end);
}

TEST_CASE("providers validate geometry and condition") {
  const Schedule s;
  toy::AnalyticGaussianModel model(s, {Grid({2, 2}), Grid({2, 2}, 1.0)});
  CHECK(kind_of([&] { model.evaluate(Grid({4}), 0.5, {0}); }) == ErrorKind::Shape);
  CHECK(kind_of([&] { model.evaluate(Grid({2, 2}), 0.5, {2}); }) == ErrorKind::Condition);
  const Schedule fm({Family::FlowMatching, 0, 0, 1.0, 50});
  CHECK(kind_of([&] { sample_sde(fm, model, {0}, Grid({2, 2}), RngStream(1)); }) == ErrorKind::UnsupportedFamily);
}
