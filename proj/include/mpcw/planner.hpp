#pragma once

#include "mpcw/active_set.hpp"
#include "mpcw/batch_qp.hpp"
#include "mpcw/neural.hpp"
#include "mpcw/sample.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mpcw {

struct PlanResult {
  Vec z;
  Vec u0;
  bool nn_used = false;
  bool certified = false;
  bool infeasible = false;
  double eta = std::numeric_limits<double>::infinity();
  int phase1_iters = 0;
  int phase2_iters = 0;
  SolveStatus status = SolveStatus::IterLimit;
};

struct Trajectory {
  std::vector<Vec> states;   // x(0..T)
  std::vector<Vec> inputs;   // u(0..T-1)
  std::vector<PlanResult> step_stats;  // QP steps only (pre-X_f)
  std::optional<int> entered_Xf_at;
  double J_cl = 0.0;
};

/// One row of the open/closed-loop metric tables.
struct MetricRow {
  std::string init_mode;   // "nn" or "cold"
  std::string criterion;   // "pf", "pfsub", "gap:<t>", "optimal"
  double mean_iters = 0.0;
  double worst_iters = 0.0;
  double mean_sigma = 0.0;
  double worst_sigma = 0.0;
  long count = 0;
  long excluded = 0;  // |J*| ~ 0 records excluded from sigma aggregation
};

Termination parse_criterion(const std::string& text);
std::string criterion_name(const Termination& t);

/// Alg. 1: network prediction (when a model is given), certificate check,
/// then Phase I / Phase II with the early-termination criterion.
PlanResult explicit_implicit_plan(const BatchQp& qp, const Vec& x,
                                  const MlpModel* model, Termination criterion,
                                  const SolverOptions& opt = {});

std::vector<MetricRow> open_loop_eval(const BatchQp& qp,
                                      const std::vector<SampleRecord>& test,
                                      const MlpModel* model,
                                      const std::vector<Termination>& criteria,
                                      const SolverOptions& opt = {},
                                      int threads = 1);

Trajectory closed_loop_simulate(const BatchQp& qp, const Vec& x0,
                                const MlpModel* model, Termination criterion,
                                const SolverOptions& opt = {},
                                int max_steps = 500);

struct ClosedLoopRow {
  std::string init_mode;
  std::string criterion;
  double mean_first_iters = 0.0;
  double worst_first_iters = 0.0;
  double mean_rest_iters = 0.0;
  double worst_rest_iters = 0.0;
  double mean_sigma_cl = 0.0;
  double worst_sigma_cl = 0.0;
  long trajectories = 0;
};

std::vector<ClosedLoopRow> closed_loop_eval(
    const BatchQp& qp, const MlpModel* model,
    const std::vector<Termination>& criteria, const std::vector<Vec>& x0_set,
    const SolverOptions& opt = {}, int max_steps = 500, int threads = 1);

}  // namespace mpcw
