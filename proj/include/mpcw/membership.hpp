#pragma once

#include "mpcw/common.hpp"
#include "mpcw/systems.hpp"

#include <deque>
#include <vector>

namespace mpcw {

/// Membership oracle for the feasible parameter set X_0: decides whether
/// QP(x) admits a feasible trajectory. States are eliminated through the
/// dynamics, leaving a feasibility LP in the stacked inputs:
///   exists u :  S u <= w - T x.
/// Decisions are accelerated by two exact certificate caches: feasible input
/// vectors (reusable primal witnesses) and Farkas rays (reusable
/// infeasibility witnesses). Cache misses fall back to a min-max-violation
/// LP whose solution refreshes the caches.
class MembershipOracle {
 public:
  struct Stats {
    long queries = 0;
    long point_hits = 0;
    long ray_hits = 0;
    long lp_solves = 0;
  };

  explicit MembershipOracle(const LtiProblemSpec& spec,
                            std::size_t cache_capacity = 128);

  bool feasible(const Vec& x);

  /// Deterministic chunked batch query over row-wise samples (xs is
  /// count x n). Within a chunk the caches are frozen (parallel-safe),
  /// misses are then solved serially in index order. Results are
  /// independent of the thread count.
  std::vector<char> feasible_batch(const Mat& xs, int threads = 1,
                                   Index chunk = 512);

  const Stats& stats() const { return stats_; }
  Index lp_vars() const { return S_.cols() + 1; }

 private:
  struct PointWitness {
    Vec u;
    Vec su;  // S u
  };
  struct RayWitness {
    double yw;  // y'w
    Vec yt;     // T'y
  };

  // -1 infeasible, +1 feasible, 0 undecided; pure w.r.t. caches.
  int probe_caches(const Vec& x, const Vec& tx) const;
  bool solve_lp(const Vec& x, const Vec& tx);

  Mat S_, T_;
  Vec w_;
  Mat A0_;  // parameter-only state rows
  Vec b0_;
  std::size_t capacity_;
  std::deque<PointWitness> points_;
  std::deque<RayWitness> rays_;
  Stats stats_;
};

}  // namespace mpcw
