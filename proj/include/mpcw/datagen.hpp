#pragma once

#include "mpcw/active_set.hpp"
#include "mpcw/batch_qp.hpp"
#include "mpcw/membership.hpp"
#include "mpcw/sample.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpcw {

struct WalkConfig {
  Index n_train = 0;   // goal counts per stage
  Index n_buffer = 0;
  Index n_test = 0;
  double step_d = 0.0;  // 0 => 1/20 of the shortest X box edge
  std::uint64_t seed = 0;
};

struct DatasetBundle {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
  WalkConfig config;       // with the resolved step_d
  Index empty_walks = 0;   // goals whose walk produced no record
};

struct RejectionResult {
  double rate = 0.0;
  double half_width = 0.0;  // binomial 95% half-width
  long feasible = 0;
  long total = 0;
};

/// Axis-aligned bounding box of a polytope via support LPs (exact for box
/// constraint sets).
std::pair<Vec, Vec> bounding_box(const Polytope& p);

/// Walks from seed.x toward x_goal in steps of step_d (final step clamped to
/// the goal), solving QP(x_i) to optimality hot-started from the previous
/// record. Stops at the first infeasible probe or solver iteration limit.
std::vector<SampleRecord> line_solve(const BatchQp& qp, const SampleRecord& seed,
                                     const Vec& x_goal, double step_d,
                                     const SolverOptions& opt = {},
                                     long* total_iters = nullptr);

/// Alg.-2 RandomWalk stage: one walk per goal row, seeds sampled uniformly;
/// the last record of each non-empty walk joins the seed pool.
std::vector<SampleRecord> random_walk(const BatchQp& qp, const Mat& goals,
                                      std::vector<SampleRecord>& seeds,
                                      double step_d, Rng& rng,
                                      const SolverOptions& opt = {},
                                      Index* empty_walks = nullptr);

/// Full three-stage generation (train / buffer / test) chained per Alg. 2;
/// buffer records are discarded after seeding the test stage.
DatasetBundle generate_data(const BatchQp& qp, const WalkConfig& config,
                            const SolverOptions& opt = {});

/// Fraction of uniform samples over X that are feasible parameters.
RejectionResult rejection_rate(const LtiProblemSpec& spec, long sample_count,
                               Rng& rng, int threads = 1);

}  // namespace mpcw
