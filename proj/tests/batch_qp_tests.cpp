#include <doctest.h>

#include "mpcw/active_set.hpp"
#include "mpcw/batch_qp.hpp"
#include "mpcw/certificates.hpp"

#include "helpers.hpp"

using namespace mpcw;

TEST_CASE("condensed dimensions for the fast benchmarks") {
  struct Row {
    BenchmarkId id;
    Index d_p, d_in, d_eq;
  };
  // system 3 included here: its terminal set is cheap enough for the fast
  // suite; system 4 lives in the acceptance slow suite.
  const Row rows[] = {
      {BenchmarkId::Sys1, 30, 66, 20},
      {BenchmarkId::Sys2, 300, 846, 240},
      {BenchmarkId::Sys3, 450, 1004, 360},
  };
  for (const Row& r : rows) {
    BatchQp qp(build_benchmark(r.id));
    CHECK(qp.d_p() == r.d_p);
    CHECK(qp.d_in() == r.d_in);
    CHECK(qp.d_eq() == r.d_eq);
  }
}

TEST_CASE("equality rows encode the rollout exactly") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  const Index n = qp.n(), m = qp.m();
  const int N = qp.N();
  Rng rng(3);
  Vec x = Vec::NullaryExpr(n, [&](Index) { return 0.1 * rng.normal(); });
  Mat inputs(m, N);
  for (int k = 0; k < N; ++k)
    for (Index i = 0; i < m; ++i) inputs(i, k) = 0.2 * rng.normal();

  // simulate forward and stack
  Vec z(qp.d_p());
  Vec xi = x;
  for (int k = 0; k < N; ++k) {
    xi = qp.spec().model.A * xi + qp.spec().model.B * inputs.col(k);
    z.segment(k * n, n) = xi;
  }
  for (int k = 0; k < N; ++k) z.segment(N * n + k * m, m) = inputs.col(k);

  CHECK((qp.G_eq() * z - qp.E_eq() * x).cwiseAbs().maxCoeff() < 1e-12);

  // objective equals the summed stage costs plus the terminal cost
  double J = x.dot(qp.Qx() * x);
  xi = x;
  for (int k = 0; k < N; ++k) {
    Vec u = inputs.col(k);
    xi = qp.spec().model.A * xi + qp.spec().model.B * u;
    const Mat& W = (k + 1 == N) ? qp.spec().P : qp.spec().Q;
    J += xi.dot(W * xi) + u.dot(qp.spec().R * u);
  }
  CHECK(qp.objective(z, x) == doctest::Approx(J).epsilon(1e-12));
}

TEST_CASE("weak and strong duality at the solved point") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Rng rng(17);
  int tested = 0;
  while (tested < 10) {
    Vec x(2);
    x << rng.uniform(-4.5, 4.5), rng.uniform(-0.9, 0.9);
    auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
    if (stats.status != SolveStatus::Optimal) continue;
    ++tested;
    const double J = qp.objective(pt.z, x);
    bool dual_ok = false;
    const double d = qp.dual_objective(pt.nu, pt.lambda, x, &dual_ok);
    CHECK(dual_ok);
    CHECK(d <= J + 1e-7 * (1.0 + std::abs(J)));                 // weak duality
    CHECK(J - d == doctest::Approx(0.0).epsilon(1e-6));          // strong at z*
    CHECK(qp.duality_gap(pt.z, pt.nu, pt.lambda, x) < 1e-6 * (1.0 + J));

    // random dual-feasible perturbation keeps d below J (weak duality)
    Vec lam = pt.lambda;
    for (Index i = 0; i < lam.size(); ++i)
      lam(i) = std::max(0.0, lam(i) + 0.1 * rng.normal());
    const double d2 = qp.dual_objective(pt.nu, lam, x);
    CHECK(d2 <= J + 1e-7 * (1.0 + std::abs(J)));
  }
}

TEST_CASE("lagrangian identity links objective and dual terms") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Rng rng(33);
  Vec x(2);
  x << 1.0, 0.2;
  Vec z = Vec::NullaryExpr(qp.d_p(), [&](Index) { return 0.1 * rng.normal(); });
  Vec nu = Vec::NullaryExpr(qp.d_eq(), [&](Index) { return rng.normal(); });
  Vec lam = Vec::NullaryExpr(qp.d_in(), [&](Index) { return rng.uniform(); });

  const double L = qp.lagrangian(z, nu, lam, x);
  const double manual =
      qp.objective(z, x) + nu.dot(qp.G_eq() * z - qp.E_eq() * x) +
      lam.dot(qp.G_in() * z - qp.w_in() - qp.E_in() * x);
  CHECK(L == doctest::Approx(manual).epsilon(1e-12));

  // dual objective = min_z L(z, nu, lambda): verify against the explicit
  // unconstrained minimizer z = -H^{-1} g / 2.
  Vec g = qp.G_eq().transpose() * nu + qp.G_in().transpose() * lam;
  Vec z_min = -0.5 * qp.H_llt().solve(g);
  CHECK(qp.dual_objective(nu, lam, x) ==
        doctest::Approx(qp.lagrangian(z_min, nu, lam, x)).epsilon(1e-10));
}

TEST_CASE("rollout helper is consistent with the equality rows") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Rng rng(8);
  Vec x(2);
  x << 0.5, -0.1;
  Mat inputs(qp.m(), qp.N());
  for (int k = 0; k < qp.N(); ++k) inputs(0, k) = 0.1 * rng.normal();
  Vec z = qp.rollout(x, inputs);
  CHECK((qp.G_eq() * z - qp.E_eq() * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("max_violation and primal_feasible agree") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  Vec x(2);
  x << 2.0, 0.1;
  auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
  REQUIRE(stats.status == SolveStatus::Optimal);
  CHECK(qp.primal_feasible(pt.z, x));
  Vec bad = pt.z;
  bad(0) += 100.0;
  CHECK_FALSE(qp.primal_feasible(bad, x));
  CHECK(qp.max_violation(bad, x) > 1.0);
}
