#include <cmath>

#include "doctest.h"
#include "dfv/numcore/error.hpp"
#include "dfv/flowcore/sampler.hpp"
#include "dfv/toymodels/analytic.hpp"

using namespace dfv;
using dfv::flow::Family;
using dfv::flow::Schedule;
using dfv::toy::AnalyticGaussianModel;

TEST_CASE("analytic_score examples") {
  const Schedule s;
  const Grid x = RngStream(1).gaussian_at(0, {2, 3});
  AnalyticGaussianModel standard(s, {Grid({2, 3})});
  const Grid sc = toy::analytic_score(standard, s, x, 0.6, {0});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(sc[i] == -x[i]);

  const Grid mu = RngStream(1).gaussian_at(1, {2, 3});
  AnalyticGaussianModel shifted(s, {mu});
  const Grid mode = scaled(mu, std::sqrt(s.alpha_bar(0.3)));
  CHECK(reduce_norm(toy::analytic_score(shifted, s, mode, 0.3, {0}), NormKind::MaxAbs) == 0.0);

  // alpha_bar(t) = 0.25 under constant beta = 2 at t = ln(4) / 2.
  const Schedule c({Family::VpSde, 2.0, 2.0, 1.0, 50});
  AnalyticGaussianModel one(c, {Grid({1}, 2.0)});
  const double t = std::log(4.0) / 2.0;
  CHECK(toy::analytic_score(one, c, Grid({1}), t, {0})[0] == doctest::Approx(1.0).epsilon(1e-14));

  try {
    toy::analytic_score(one, c, Grid({1}), t, {3});
    FAIL("expected a condition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Condition);
  }
}

TEST_CASE("analytic score matches a finite-difference gradient of the log-density") {
  const Schedule s;
  AnalyticGaussianModel model(s, {RngStream(2).gaussian_at(0, {8}), RngStream(2).gaussian_at(1, {8})});
  RngStream probes(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid x = probes.gaussian({8});
    const double t = 0.05 + 0.9 * probes.uniform(1)[0];
    const int c = trial % 2;
    const Grid sc = model.score(x, t, {c});
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-5;
      Grid xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (model.log_density(xp, t, {c}) - model.log_density(xm, t, {c})) / (2 * h);
      CHECK(std::abs(fd - sc[i]) <= 1e-5 * std::max(1.0, std::abs(sc[i])));
    }
  }
}

TEST_CASE("flow-matching analytic velocity transports noise to the data mean") {
  const Schedule fm({Family::FlowMatching, 0, 0, 1.0, 200});
  AnalyticGaussianModel model(fm, {Grid({4000}, -1.0), Grid({4000}, 3.0)});
  const Grid zT = RngStream(4).gaussian_at(0, {4000});
  for (int c : {0, 1}) {
    const auto traj = flow::sample_pf_ode(fm, model, {c}, zT);
    const Grid& end = traj.endpoint();
    const double mean = reduce_norm(end, NormKind::Mean);
    double var = 0.0;
    for (double v : end.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(end.size());
    CHECK(mean == doctest::Approx(c == 0 ? -1.0 : 3.0).epsilon(0.03));
    CHECK(var == doctest::Approx(1.0).epsilon(0.06));
  }
}

TEST_CASE("analytic model rejects inconsistent means and foreign schedules") {
  const Schedule s;
  CHECK_THROWS_AS(AnalyticGaussianModel(s, {}), Error);
  CHECK_THROWS_AS(AnalyticGaussianModel(s, {Grid({2}), Grid({3})}), Error);
  AnalyticGaussianModel m(s, {Grid({2})});
  const Schedule other({Family::VpSde, 0.1, 10.0, 1.0, 50});
  CHECK_THROWS_AS(toy::analytic_score(m, other, Grid({2}), 0.5, {0}), Error);
}
