#include "mpcw/membership.hpp"

#include "mpcw/lp.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>

namespace mpcw {
namespace {

constexpr double kFeasTol = 1e-9;

}  // namespace

MembershipOracle::MembershipOracle(const LtiProblemSpec& spec,
                                   std::size_t cache_capacity)
    : capacity_(cache_capacity) {
  const Index n = spec.n(), m = spec.m();
  const Index N = spec.N;
  const Index c_x = spec.X.rows(), c_u = spec.U.rows(), c_f = spec.Xf.rows();
  const Index rows = (N - 1) * c_x + c_f + N * c_u;

  // x_k = A^k x + C_k u with C_k = [A^{k-1}B ... B 0 ...].
  std::vector<Mat> powers(N + 1);
  powers[0] = Mat::Identity(n, n);
  for (Index k = 1; k <= N; ++k) powers[k] = spec.model.A * powers[k - 1];
  Mat C = Mat::Zero(n, N * m);  // C_k built incrementally
  S_ = Mat::Zero(rows, N * m);
  T_ = Mat::Zero(rows, n);
  w_ = Vec::Zero(rows);
  Index r = 0;
  for (Index k = 1; k <= N; ++k) {
    // C_k = A * C_{k-1} + B e_k'
    C = spec.model.A * C;
    C.middleCols((k - 1) * m, m) += spec.model.B;
    if (k < N) {
      S_.middleRows(r, c_x) = spec.X.A_mat * C;
      T_.middleRows(r, c_x) = spec.X.A_mat * powers[k];
      w_.segment(r, c_x) = spec.X.b;
      r += c_x;
    } else {
      S_.middleRows(r, c_f) = spec.Xf.A_mat * C;
      T_.middleRows(r, c_f) = spec.Xf.A_mat * powers[N];
      w_.segment(r, c_f) = spec.Xf.b;
      r += c_f;
    }
  }
  for (Index k = 0; k < N; ++k) {
    S_.block(r, k * m, c_u, m) = spec.U.A_mat;
    w_.segment(r, c_u) = spec.U.b;
    r += c_u;
  }
  A0_ = spec.X.A_mat;
  b0_ = spec.X.b;
}

int MembershipOracle::probe_caches(const Vec& x, const Vec& tx) const {
  for (const auto& ray : rays_)
    if (ray.yw - ray.yt.dot(x) < -kFeasTol) return -1;
  for (const auto& pt : points_)
    if (((pt.su + tx - w_).array() <= kFeasTol).all()) return 1;
  return 0;
}

bool MembershipOracle::solve_lp(const Vec& x, const Vec& tx) {
  ++stats_.lp_solves;
  const Index nu = S_.cols();
  Vec r = w_ - tx;

  Mat A(S_.rows(), nu + 1);
  A.leftCols(nu) = S_;
  A.rightCols(1).setConstant(-1.0);
  Vec c = Vec::Zero(nu + 1);
  c(nu) = 1.0;
  Vec v0 = Vec::Zero(nu + 1);
  v0(nu) = std::max(0.0, -r.minCoeff()) + 1.0;

  LpResult res = lp_solve(c, A, r, v0);
  // The slack column keeps t unbounded below until the u block pins it, so a
  // degenerate descent ray can be misreported as unbounded, and hard
  // instances can exhaust the pivot budget. Both recover by restarting from
  // the current u re-lifted to a feasible (u, t); an unbounded verdict whose
  // u block already satisfies S u <= r is itself a feasibility witness.
  for (int attempt = 1; attempt <= 3 && res.status != LpStatus::Optimal;
       ++attempt) {
    Vec u = res.x.head(nu);
    const double viol = (S_ * u - r).maxCoeff();
    if (res.status == LpStatus::Unbounded && viol <= kFeasTol) {
      PointWitness pw;
      pw.u = std::move(u);
      pw.su = S_ * pw.u;
      points_.push_front(std::move(pw));
      if (points_.size() > capacity_) points_.pop_back();
      return true;
    }
    Vec restart(nu + 1);
    restart << u, std::max(0.0, viol) + 1.0;
    const int budget =
        (1 << attempt) * (50 * static_cast<int>(A.rows() + A.cols()) + 200);
    res = lp_solve(c, A, r, restart, budget);
  }
  if (res.status != LpStatus::Optimal)
    throw NumericalError("MembershipOracle: feasibility LP did not converge");

  if (res.value <= kFeasTol) {
    PointWitness pw;
    pw.u = res.x.head(nu);
    pw.su = S_ * pw.u;
    points_.push_front(std::move(pw));
    if (points_.size() > capacity_) points_.pop_back();
    return true;
  }
  // Farkas ray from the optimal multipliers: y >= 0, y'S = 0, sum y = 1,
  // and y'(w - Tx) = -t* < 0 at this x.
  Vec y = Vec::Zero(S_.rows());
  for (std::size_t j = 0; j < res.active.size(); ++j)
    y(res.active[j]) = std::max(0.0, res.multipliers(static_cast<Index>(j)));
  double total = y.sum();
  if (total > 0.0) {
    y /= total;
    if ((S_.transpose() * y).cwiseAbs().maxCoeff() <= 1e-7) {
      RayWitness rw;
      rw.yw = y.dot(w_);
      rw.yt = T_.transpose() * y;
      if (rw.yw - rw.yt.dot(x) < -kFeasTol) {
        rays_.push_front(std::move(rw));
        if (rays_.size() > capacity_) rays_.pop_back();
      }
    }
  }
  return false;
}

bool MembershipOracle::feasible(const Vec& x) {
  ++stats_.queries;
  if (((A0_ * x - b0_).array() > kFeasTol).any()) return false;
  Vec tx = T_ * x;
  int cached = probe_caches(x, tx);
  if (cached > 0) {
    ++stats_.point_hits;
    return true;
  }
  if (cached < 0) {
    ++stats_.ray_hits;
    return false;
  }
  return solve_lp(x, tx);
}

std::vector<char> MembershipOracle::feasible_batch(const Mat& xs, int threads,
                                                   Index chunk) {
  const Index count = xs.rows();
  std::vector<char> out(count, 0);
  std::vector<signed char> decided(count, 0);
  for (Index start = 0; start < count; start += chunk) {
    const Index stop = std::min(count, start + chunk);
    // Frozen-cache parallel pass.
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
#endif
    for (Index i = start; i < stop; ++i) {
      Vec x = xs.row(i).transpose();
      if (((A0_ * x - b0_).array() > kFeasTol).any()) {
        decided[i] = -1;
        continue;
      }
      decided[i] = static_cast<signed char>(probe_caches(x, T_ * x));
    }
    for (Index i = start; i < stop; ++i) {
      if (decided[i] != 0) {
        out[i] = decided[i] > 0 ? 1 : 0;
        if (decided[i] > 0)
          ++stats_.point_hits;
        else
          ++stats_.ray_hits;
        ++stats_.queries;
        continue;
      }
      out[i] = feasible(xs.row(i).transpose()) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace mpcw
