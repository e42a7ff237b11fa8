#pragma once

#include "mpcw/common.hpp"

#include <optional>
#include <vector>

namespace mpcw {

enum class LpStatus { Optimal, Unbounded, IterLimit };

struct LpResult {
  LpStatus status = LpStatus::IterLimit;
  Vec x;
  double value = 0.0;
  /// Multipliers of the rows active at the solution (lambda >= 0 with
  /// c + A_W' lambda = 0), paired with their row indices.
  std::vector<int> active;
  Vec multipliers;
  int iters = 0;
};

/// Dense active-set solver for  min c'x  s.t.  A x <= b,  started from a
/// feasible point. Projected-gradient steps onto the working-set null space
/// with Bland's rule engaged after degenerate stalls.
LpResult lp_solve(const Vec& c, const Mat& A, const Vec& b, const Vec& x0,
                  int max_iter = 0);

/// Support function  h(dir) = max dir'x  over {x : A x <= b}. Requires a
/// feasible interior start (defaults to 0, valid whenever b > 0). Returns
/// nullopt when the LP is unbounded in that direction.
std::optional<double> support_function(const Vec& dir, const Mat& A, const Vec& b);

}  // namespace mpcw
