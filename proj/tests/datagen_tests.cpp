#include <doctest.h>

#include "mpcw/datagen.hpp"

#include "helpers.hpp"

#include <set>

using namespace mpcw;

TEST_CASE("bounding box of a box polytope is exact") {
  LtiProblemSpec spec = build_benchmark(BenchmarkId::Sys1);
  auto [lo, hi] = bounding_box(spec.X);
  CHECK(lo(0) == doctest::Approx(-5.0));
  CHECK(hi(0) == doctest::Approx(5.0));
  CHECK(lo(1) == doctest::Approx(-1.0));
  CHECK(hi(1) == doctest::Approx(1.0));
}

TEST_CASE("line_solve walks in bounded steps toward the goal") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  SampleRecord seed;
  seed.x = Vec::Zero(2);
  auto [pt, stats] =
      solve(qp, seed.x, Vec::Zero(qp.d_p()), Termination::optimal());
  REQUIRE(stats.status == SolveStatus::Optimal);
  seed.z_star = pt.z;
  seed.nu_star = pt.nu;
  seed.lambda_star = pt.lambda;
  for (int r : stats.working) seed.aux.push_back(static_cast<std::uint32_t>(r));

  Vec goal(2);
  goal << 4.0, 0.8;
  const double step_d = 0.1;
  auto records = line_solve(qp, seed, goal, step_d);
  REQUIRE(!records.empty());

  Vec prev = seed.x;
  for (const auto& rec : records) {
    CHECK((rec.x - prev).norm() <= step_d + 1e-12);
    // every emitted record carries a verified optimal pair
    CHECK(qp.max_violation(rec.z_star, rec.x) < 1e-7);
    CHECK(qp.duality_gap(rec.z_star, rec.nu_star, rec.lambda_star, rec.x) <
          1e-6);
    prev = rec.x;
  }
  // the walk either reaches the goal or stops at the feasibility boundary
  if ((records.back().x - goal).norm() > 1e-9) {
    // stopped early: the next probe toward the goal must be infeasible
    Vec gap = goal - records.back().x;
    Vec probe = gap.norm() <= step_d
                    ? goal
                    : Vec(records.back().x + step_d * gap.normalized());
    Phase1Result p1 = phase1(qp, probe, Vec::Zero(qp.d_p()));
    CHECK_FALSE(p1.feasible);
  }
}

TEST_CASE("generate_data: counts, feasibility, and split disjointness") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  WalkConfig cfg;
  cfg.n_train = 30;
  cfg.n_buffer = 8;
  cfg.n_test = 8;
  cfg.seed = 5;
  DatasetBundle bundle = generate_data(qp, cfg);
  CHECK(bundle.train.size() > 100);  // walks emit many records per goal
  CHECK(bundle.test.size() > 10);
  CHECK(bundle.config.step_d == doctest::Approx(2.0 / 20.0));  // min edge 2 over 20

  std::set<std::vector<double>> train_xs;
  for (const auto& rec : bundle.train) {
    CHECK(qp.max_violation(rec.z_star, rec.x) < 1e-7);
    train_xs.insert(std::vector<double>(rec.x.data(), rec.x.data() + rec.x.size()));
  }
  for (const auto& rec : bundle.test) {
    CHECK(qp.max_violation(rec.z_star, rec.x) < 1e-7);
    std::vector<double> key(rec.x.data(), rec.x.data() + rec.x.size());
    CHECK(train_xs.count(key) == 0);
  }
}

TEST_CASE("generation is deterministic given the seed") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  WalkConfig cfg;
  cfg.n_train = 10;
  cfg.n_buffer = 4;
  cfg.n_test = 4;
  cfg.seed = 77;
  DatasetBundle a = generate_data(qp, cfg);
  DatasetBundle b = generate_data(qp, cfg);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK((a.train[i].x - b.train[i].x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.train[i].z_star - b.train[i].z_star).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("hot starts beat cold starts along the walk") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  SampleRecord seed;
  seed.x = Vec::Zero(2);
  auto [pt, stats] =
      solve(qp, seed.x, Vec::Zero(qp.d_p()), Termination::optimal());
  seed.z_star = pt.z;
  seed.nu_star = pt.nu;
  seed.lambda_star = pt.lambda;
  for (int r : stats.working) seed.aux.push_back(static_cast<std::uint32_t>(r));

  Vec goal(2);
  goal << 4.5, 0.9;
  long hot_iters = 0;
  auto records = line_solve(qp, seed, goal, 0.1, {}, &hot_iters);
  REQUIRE(!records.empty());

  long cold_iters = 0;
  for (const auto& rec : records) {
    auto [p, s] = solve(qp, rec.x, Vec::Zero(qp.d_p()), Termination::optimal());
    cold_iters += s.phase1_iters + s.phase2_iters;
  }
  CHECK(hot_iters < cold_iters);
}

TEST_CASE("rejection sampling matches a direct feasibility sweep") {
  LtiProblemSpec spec = build_benchmark(BenchmarkId::Sys1);
  Rng rng(19);
  RejectionResult res = rejection_rate(spec, 4000, rng);
  CHECK(res.total == 4000);
  CHECK(res.feasible + 0 <= res.total);
  CHECK(res.rate == doctest::Approx(static_cast<double>(res.feasible) / 4000.0));
  // the double-integrator feasible fraction is high (published: 98.6%)
  CHECK(res.rate > 0.95);
  CHECK(res.half_width ==
        doctest::Approx(1.96 * std::sqrt(res.rate * (1.0 - res.rate) / 4000.0)));
}

TEST_CASE("infeasible origin raises a configuration error") {
  Rng rng(91);
  LtiProblemSpec spec = build_benchmark(BenchmarkId::Sys1);
  // shrink the input set to nothing reachable: b_u < 0 is an empty polytope,
  // making every parameter infeasible including the origin
  spec.U.b = Vec::Constant(spec.U.b.size(), -1.0);
  BatchQp qp(spec);
  WalkConfig cfg;
  cfg.n_train = 2;
  cfg.n_buffer = 1;
  cfg.n_test = 1;
  CHECK_THROWS_AS(generate_data(qp, cfg), ConfigError);
}
