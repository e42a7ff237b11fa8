#include "mpcw/lp.hpp"

#include "mpcw/working_qr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpcw {
namespace {

constexpr double kActiveTol = 1e-9;
constexpr double kDirTol = 1e-11;
constexpr double kMultTol = 1e-9;

}  // namespace

LpResult lp_solve(const Vec& c, const Mat& A, const Vec& b, const Vec& x0,
                  int max_iter) {
  const Index n = c.size();
  const Index m = A.rows();
  if (A.cols() != n || b.size() != m || x0.size() != n)
    throw InvalidArgument("lp_solve: dimension mismatch");
  if (((A * x0 - b).array() > kActiveTol).any())
    throw InvalidArgument("lp_solve: start point infeasible");
  if (max_iter <= 0) max_iter = 50 * static_cast<int>(n + m) + 200;

  LpResult res;
  res.x = x0;
  WorkingQr qr(n);
  std::vector<int> working;

  // Seed the working set with independent rows active at x0.
  {
    Vec resid = A * res.x - b;
    for (Index i = 0; i < m; ++i)
      if (resid(i) > -kActiveTol && qr.append(A.row(i).transpose()))
        working.push_back(static_cast<int>(i));
  }

  int stall = 0;
  bool bland = false;
  for (res.iters = 0; res.iters < max_iter; ++res.iters) {
    // Projected steepest descent on the working-set null space.
    Vec d;
    if (qr.size() < n) {
      auto z = qr.null_basis();
      d = -(z * (z.transpose() * c));
    } else {
      d = Vec::Zero(n);
    }

    if (d.norm() <= kDirTol * std::max(1.0, c.norm())) {
      Vec lam = working.empty() ? Vec(0) : qr.multipliers(-c);
      int drop = -1;
      if (bland) {
        int best_row = std::numeric_limits<int>::max();
        for (Index j = 0; j < lam.size(); ++j)
          if (lam(j) < -kMultTol && working[j] < best_row) {
            best_row = working[j];
            drop = static_cast<int>(j);
          }
      } else {
        double worst = -kMultTol;
        for (Index j = 0; j < lam.size(); ++j)
          if (lam(j) < worst) {
            worst = lam(j);
            drop = static_cast<int>(j);
          }
      }
      if (drop < 0) {
        res.status = LpStatus::Optimal;
        res.value = c.dot(res.x);
        res.active = working;
        res.multipliers = lam.cwiseMax(0.0);
        return res;
      }
      qr.remove(drop);
      working.erase(working.begin() + drop);
      continue;
    }
    // Normalize so the ratio-test tolerances are scale-independent; a nearly
    // zero direction would otherwise slip past every blocking row and be
    // misread as an unbounded ray.
    d /= d.norm();

    // Ratio test.
    Vec ad = A * d;
    Vec resid = A * res.x - b;
    double alpha = std::numeric_limits<double>::infinity();
    int block = -1;
    for (Index i = 0; i < m; ++i) {
      if (ad(i) <= kDirTol) continue;
      if (std::find(working.begin(), working.end(), static_cast<int>(i)) !=
          working.end())
        continue;
      double ratio = std::max(0.0, -resid(i)) / ad(i);
      if (ratio < alpha - 1e-12 ||
          (ratio < alpha + 1e-12 && (block < 0 || static_cast<int>(i) < block))) {
        alpha = std::min(alpha, ratio);
        block = static_cast<int>(i);
      }
    }
    if (block < 0) {
      res.status = LpStatus::Unbounded;
      res.x += d;  // a ray direction from the last point
      return res;
    }

    if (alpha <= 1e-12) {
      if (++stall > 20) bland = true;
    } else {
      stall = 0;
      bland = false;
      res.x += alpha * d;
    }
    if (!qr.append(A.row(block).transpose()))
      throw NumericalError("lp_solve: blocking row dependent on working set");
    working.push_back(block);
  }
  res.status = LpStatus::IterLimit;
  res.value = c.dot(res.x);
  return res;
}

std::optional<double> support_function(const Vec& dir, const Mat& A, const Vec& b) {
  LpResult r = lp_solve(-dir, A, b, Vec::Zero(dir.size()));
  if (r.status == LpStatus::Unbounded) return std::nullopt;
  if (r.status != LpStatus::Optimal)
    throw NumericalError("support_function: LP did not converge");
  return dir.dot(r.x);
}

}  // namespace mpcw
