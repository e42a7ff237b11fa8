#pragma once

#include "mpcw/batch_qp.hpp"
#include "mpcw/qp_engine.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mpcw {

enum class TermKind { PrimalFeasible, FeasibleAndSuboptimal, FixedGap, Optimal };

struct Termination {
  TermKind kind = TermKind::Optimal;
  double threshold = 0.0;  // FixedGap duality-gap bound

  static Termination primal_feasible() { return {TermKind::PrimalFeasible, 0.0}; }
  static Termination feasible_and_suboptimal() {
    return {TermKind::FeasibleAndSuboptimal, 0.0};
  }
  static Termination fixed_gap(double threshold) {
    if (!(threshold >= 0.0))
      throw InvalidArgument("Termination: FixedGap threshold must be >= 0");
    return {TermKind::FixedGap, threshold};
  }
  static Termination optimal() { return {TermKind::Optimal, 0.0}; }
};

enum class SolveStatus { Optimal, Certified, Feasible, Infeasible, IterLimit };

struct SolveStats {
  int phase1_iters = 0;
  int phase2_iters = 0;
  SolveStatus status = SolveStatus::IterLimit;
  bool rhs_perturbed = false;
  std::vector<int> working;  // final inequality working set
};

struct Phase1Result {
  bool feasible = false;
  Vec z0;
  int iters = 0;
};

/// Certificate check used for early termination. Receives the current primal
/// iterate; returns (pass, nu, lambda) — duals valid when pass is true.
struct CertifierResult {
  bool pass = false;
  double eta = std::numeric_limits<double>::infinity();
  Vec nu;
  Vec lambda;
};
using Certifier = std::function<CertifierResult(
    const BatchQp&, const Vec& x, const Vec& z, double gap_threshold)>;

/// Elastic-variable linear feasibility phase, solved by the Phase-II engine
/// on the eps-regularized elastic QP. Infeasible is a valid outcome (x
/// outside the feasible parameter set), not a fault.
Phase1Result phase1(const BatchQp& qp, const Vec& x, const Vec& z_init,
                    const SolverOptions& opt = {});

/// Inequality rows active at z0, greedily filtered to keep
/// [equality rows; selected rows] full row rank; ascending index order.
std::vector<int> init_working_set(const BatchQp& qp, const Vec& x, const Vec& z0,
                                  double tol = 1e-7);

std::pair<PrimalDualPoint, SolveStats> solve(
    const BatchQp& qp, const Vec& x, const Vec& z_init, Termination criterion,
    const Certifier& certifier = {}, const SolverOptions& opt = {},
    const std::vector<int>* working_hint = nullptr);

}  // namespace mpcw
