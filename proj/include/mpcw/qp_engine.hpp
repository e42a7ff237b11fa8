#pragma once

#include "mpcw/common.hpp"
#include "mpcw/working_qr.hpp"

#include <map>
#include <vector>

namespace mpcw {

/// Tolerances and limits shared by Phase I / Phase II.
struct SolverOptions {
  double feas_tol = 1e-8;       // primal feasibility
  double active_tol = 1e-7;     // working-set / active-row detection
  double step_zero_tol = 1e-9;  // ||p||_inf <= tol*(1+||z||_inf) => stationary
  double mult_tol = 1e-9;       // negative-multiplier threshold
  double ratio_dir_tol = 1e-12; // g'p > tol qualifies a row for the ratio test
  double rank_tol = 1e-10;      // working-set independence
  double drift_tol = 1e-9;      // ||A_W p||_inf forcing a refactorization
  int refactor_every = 50;      // scheduled refactorization cadence
  int max_iter = 0;             // 0 => 50 * number of variables
  double phase1_eps = 1e-8;     // elastic regularization strength
};

enum class StepKind { MovedFull, Blocked, Dropped, Converged };

struct StepOutcome {
  StepKind kind;
  int row = -1;  // blocked/dropped inequality row, -1 otherwise
};

/// Primal active-set engine for
///   min v'Hv + c'v   s.t.  A_eq v = b_eq,  A_in v <= b_in
/// from a feasible start, via the null-space method on an incrementally
/// updated QR factorization of the working-constraint rows.
class QpEngine {
 public:
  QpEngine(const Mat& H, const Vec& c, const Mat& A_eq, const Vec& b_eq,
           const Mat& A_in, Vec b_in, SolverOptions opt = {});

  /// Initializes the iterate and working set. `working_hint` lists inequality
  /// rows to activate; rows that are inactive at v0 or rank-deficient against
  /// the equalities are skipped. Throws if v0 is infeasible.
  void start(const Vec& v0, const std::vector<int>& working_hint = {});

  StepOutcome step();

  const Vec& v() const { return v_; }
  const std::vector<int>& working() const { return working_; }
  int iters() const { return iters_; }
  bool rhs_perturbed() const { return perturbed_; }
  double objective() const { return v_.dot(H_ * v_) + c_.dot(v_); }

  /// Valid after Converged: equality multipliers and full-length inequality
  /// multipliers (zeros off the working set, tiny negatives clamped).
  const Vec& nu() const { return nu_; }
  const Vec& lambda() const { return lambda_; }

 private:
  Vec gradient() const { return 2.0 * (H_ * v_) + c_; }
  Vec null_space_step() const;
  void refactor();

  Mat H_, A_eq_, A_in_;
  Vec c_, b_eq_, b_in_;
  SolverOptions opt_;

  Vec v_;
  WorkingQr qr_;
  std::vector<int> eq_rows_;   // equality rows kept in the factorization
  std::vector<int> working_;  // active inequality rows, factorization order
  Vec nu_, lambda_;
  double scaled_identity_h_ = 0.0;  // > 0 when H is a positive multiple of I
  int iters_ = 0;
  int updates_since_refactor_ = 0;
  bool perturbed_ = false;
  std::map<std::vector<int>, int> stalled_sets_;
};

}  // namespace mpcw
