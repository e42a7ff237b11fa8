#include <doctest.h>

#include "mpcw/active_set.hpp"
#include "mpcw/certificates.hpp"

#include "helpers.hpp"

using namespace mpcw;

TEST_CASE("certificate passes at the optimum and bounds suboptimality") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Rng rng(51);
  int tested = 0;
  while (tested < 25) {
    Vec x(2);
    x << rng.uniform(-4.0, 4.0), rng.uniform(-0.9, 0.9);
    auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
    if (stats.status != SolveStatus::Optimal) continue;
    ++tested;

    Certificate cert = certify(qp, pt.z, x);
    CHECK(cert.eta >= -1e-9);
    CHECK(cert.eta < 1e-6 * (1.0 + qp.objective(pt.z, x)));
    CHECK(cert.passed);  // eta ~ 0 <= x'Qx for these interior states

    // eta upper-bounds the true suboptimality of any feasible candidate:
    // move to a nearby feasible point by pulling toward the origin plan.
    auto [pt0, stats0] =
        solve(qp, x, Vec::Zero(qp.d_p()), Termination::primal_feasible());
    REQUIRE(stats0.status != SolveStatus::Infeasible);
    Certificate c2 = certify(qp, pt0.z, x);
    const double sigma = qp.objective(pt0.z, x) - qp.objective(pt.z, x);
    CHECK(c2.eta >= sigma - 1e-8 * (1.0 + std::abs(sigma)));
  }
}

TEST_CASE("certificate fails on infeasible plans") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Vec x(2);
  x << 1.0, 0.0;
  Vec z = Vec::Constant(qp.d_p(), 100.0);  // way outside the constraints
  Certificate cert = certify(qp, z, x);
  CHECK_FALSE(cert.passed);
  CHECK(cert.eta == std::numeric_limits<double>::infinity());
}

TEST_CASE("recovered duals are dual feasible with complementary slack") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Vec x(2);
  x << 3.0, 0.5;
  auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
  REQUIRE(stats.status == SolveStatus::Optimal);

  std::vector<int> act = active_rows(qp, pt.z, x);
  auto [nu, lam] = recover_duals(qp, pt.z, act, x);
  CHECK((lam.array() >= 0.0).all());
  // stationarity: 2Hz + G_eq' nu + G_in' lambda ~ 0
  Vec grad = 2.0 * (qp.H() * pt.z) + qp.G_eq().transpose() * nu +
             qp.G_in().transpose() * lam;
  CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
  // complementary slackness: lambda zero off the active set
  Vec slack = qp.w_in() + qp.E_in() * x - qp.G_in() * pt.z;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam(i) > 1e-8) CHECK(slack(i) < 1e-6);
}

TEST_CASE("threshold rule: eta <= max(x'Qx, eps_abs)") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Vec x(2);
  x << 2.0, 0.3;
  auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
  REQUIRE(stats.status == SolveStatus::Optimal);
  Certificate cert = certify(qp, pt.z, x);
  CHECK(cert.threshold == doctest::Approx(x.dot(qp.Qx() * x)));

  // with a large eps_abs the threshold switches to the absolute bound
  Certificate loose = certify(qp, pt.z, x, 1e-7, 1e6);
  CHECK(loose.threshold == doctest::Approx(1e6));
  CHECK(loose.passed);
}

TEST_CASE("default_certifier mirrors certify") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Vec x(2);
  x << 1.5, -0.2;
  auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
  REQUIRE(stats.status == SolveStatus::Optimal);
  CertifierResult r = default_certifier(qp, x, pt.z, -1.0);
  Certificate cert = certify(qp, pt.z, x);
  CHECK(r.pass == cert.passed);
  CHECK(r.eta == doctest::Approx(cert.eta).epsilon(1e-12));

  // fixed threshold variant
  CertifierResult tight = default_certifier(qp, x, pt.z, 1e-3);
  CHECK(tight.pass);  // optimal point has ~zero gap
}
