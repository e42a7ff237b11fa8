#pragma once

#include "mpcw/common.hpp"

#include <vector>

namespace mpcw {

/// Incremental QR factorisation of a set of working-constraint normals,
/// stored column-wise:  [a_1 ... a_k] = Q [R; 0]  with Q n-by-n orthogonal.
///
/// Columns are appended with Givens rotations in O(n^2); removing a column
/// rebuilds the trailing part of the factorisation. The last n-k columns of
/// Q span the null space of the working rows, which is what both the LP and
/// the QP engine step computations need.
class WorkingQr {
 public:
  explicit WorkingQr(Index n) : n_(n), q_(Mat::Identity(n, n)), r_(n, 0) {}

  Index dim() const { return n_; }
  Index size() const { return r_.cols(); }

  const Mat& q() const { return q_; }
  /// Upper-triangular k-by-k block of R.
  Mat r_block() const { return r_.topRows(size()).triangularView<Eigen::Upper>(); }

  /// Orthonormal basis of the null space of the working rows (view into Q).
  auto null_basis() const { return q_.rightCols(n_ - size()); }
  auto range_basis() const { return q_.leftCols(size()); }

  /// Append column a. Returns false (and leaves the factorisation untouched)
  /// when a is numerically dependent on the current columns.
  bool append(const Vec& a, double rank_tol = 1e-10) {
    const Index k = size();
    if (k >= n_) return false;
    Vec w = q_.transpose() * a;
    for (Index i = n_ - 1; i > k; --i) {
      Eigen::JacobiRotation<double> rot;
      rot.makeGivens(w(i - 1), w(i));
      w.applyOnTheLeft(i - 1, i, rot.adjoint());
      q_.applyOnTheRight(i - 1, i, rot);
    }
    double scale = std::max(a.norm(), 1.0);
    if (std::abs(w(k)) <= rank_tol * scale) return false;
    r_.conservativeResize(Eigen::NoChange, k + 1);
    r_.col(k) = w;
    r_.col(k).tail(n_ - k - 1).setZero();
    cols_.push_back(a);
    return true;
  }

  /// Remove column j (0-based within the working set); refactorises the
  /// columns that followed it.
  void remove(Index j) {
    cols_.erase(cols_.begin() + j);
    rebuild();
  }

  void clear() {
    cols_.clear();
    q_.setIdentity(n_, n_);
    r_.resize(n_, 0);
  }

  /// Least-squares multipliers: solves  [a_1 ... a_k] lam = rhs  via
  /// lam = R^{-1} Q_1' rhs.
  Vec multipliers(const Vec& rhs) const {
    const Index k = size();
    Vec t = range_basis().transpose() * rhs;
    return r_.topRows(k).triangularView<Eigen::Upper>().solve(t);
  }

 private:
  void rebuild() {
    std::vector<Vec> cols = std::move(cols_);
    clear();
    for (const Vec& a : cols)
      if (!append(a))
        throw NumericalError("WorkingQr: rank lost during refactorisation");
  }

  Index n_;
  Mat q_;
  Mat r_;  // n x k, upper trapezoidal
  std::vector<Vec> cols_;
};

}  // namespace mpcw
