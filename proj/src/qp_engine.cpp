#include "mpcw/qp_engine.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

namespace mpcw {

QpEngine::QpEngine(const Mat& H, const Vec& c, const Mat& A_eq, const Vec& b_eq,
                   const Mat& A_in, Vec b_in, SolverOptions opt)
    : H_(H),
      A_eq_(A_eq),
      A_in_(A_in),
      c_(c),
      b_eq_(b_eq),
      b_in_(std::move(b_in)),
      opt_(opt),
      qr_(H.rows()) {
  const Index n = H_.rows();
  if (H_.cols() != n || c_.size() != n ||
      (A_eq_.size() > 0 && A_eq_.cols() != n) || A_eq_.rows() != b_eq_.size() ||
      (A_in_.size() > 0 && A_in_.cols() != n) || A_in_.rows() != b_in_.size())
    throw InvalidArgument("QpEngine: dimension mismatch");
  if (opt_.max_iter <= 0) opt_.max_iter = 50 * static_cast<int>(n);
  double diag0 = n > 0 ? H_(0, 0) : 0.0;
  if (diag0 > 0.0 &&
      (H_ - diag0 * Mat::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0)
    scaled_identity_h_ = diag0;
}

void QpEngine::start(const Vec& v0, const std::vector<int>& working_hint) {
  const Index n = H_.rows();
  if (v0.size() != n) throw InvalidArgument("QpEngine::start: bad v0 size");
  double viol = 0.0;
  if (A_eq_.rows() > 0)
    viol = (A_eq_ * v0 - b_eq_).cwiseAbs().maxCoeff();
  if (A_in_.rows() > 0)
    viol = std::max(viol, (A_in_ * v0 - b_in_).maxCoeff());
  if (viol > opt_.feas_tol)
    throw InvalidArgument("QpEngine::start: v0 is not feasible");

  v_ = v0;
  qr_.clear();
  eq_rows_.clear();
  working_.clear();
  iters_ = 0;
  updates_since_refactor_ = 0;
  stalled_sets_.clear();

  for (Index i = 0; i < A_eq_.rows(); ++i)
    if (qr_.append(A_eq_.row(i).transpose(), opt_.rank_tol))
      eq_rows_.push_back(static_cast<int>(i));
  for (int i : working_hint) {
    if (i < 0 || i >= A_in_.rows())
      throw InvalidArgument("QpEngine::start: hint row out of range");
    if (std::abs(A_in_.row(i) * v_ - b_in_(i)) > opt_.active_tol) continue;
    if (qr_.append(A_in_.row(i).transpose(), opt_.rank_tol))
      working_.push_back(i);
  }
}

Vec QpEngine::null_space_step() const {
  const Index n = H_.rows();
  const Index k = qr_.size();
  if (k >= n) return Vec::Zero(n);
  auto Z = qr_.null_basis();
  if (scaled_identity_h_ > 0.0) {
    Vec rhs = -0.5 * (Z.transpose() * gradient());
    return Z * (rhs / scaled_identity_h_);
  }
  Mat red = Z.transpose() * H_ * Z;
  Vec rhs = -0.5 * (Z.transpose() * gradient());
  Eigen::LDLT<Mat> ldlt(red);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("QpEngine: reduced Hessian factorization failed");
  return Z * ldlt.solve(rhs);
}

void QpEngine::refactor() {
  qr_.clear();
  std::vector<int> eq = std::move(eq_rows_);
  std::vector<int> w = std::move(working_);
  eq_rows_.clear();
  working_.clear();
  for (int i : eq)
    if (qr_.append(A_eq_.row(i).transpose(), opt_.rank_tol))
      eq_rows_.push_back(i);
  for (int i : w) {
    if (!qr_.append(A_in_.row(i).transpose(), opt_.rank_tol))
      throw NumericalError("QpEngine: working set lost rank on refactorization");
    working_.push_back(i);
  }
  updates_since_refactor_ = 0;
}

StepOutcome QpEngine::step() {
  ++iters_;
  if (updates_since_refactor_ >= opt_.refactor_every) refactor();

  Vec p = null_space_step();
  if (working_.size() + eq_rows_.size() > 0) {
    double drift = 0.0;
    for (int i : eq_rows_) drift = std::max(drift, std::abs(A_eq_.row(i) * p));
    for (int i : working_) drift = std::max(drift, std::abs(A_in_.row(i) * p));
    if (drift > opt_.drift_tol) {
      refactor();
      p = null_space_step();
    }
  }

  bool stationary =
      p.cwiseAbs().maxCoeff() <= opt_.step_zero_tol * (1.0 + v_.cwiseAbs().maxCoeff());
  if (!stationary) {
    // A step can stay above the size tolerance yet be pure roundoff when the
    // Hessian is nearly singular (e.g. the elastic phase-1 regularization):
    // judge it by the exact quadratic decrease it would achieve instead.
    const Vec hp = H_ * p;
    const double predicted = gradient().dot(p) + p.dot(hp);
    const double f_scale =
        1.0 + std::abs(v_.dot(H_ * v_) + c_.dot(v_));
    if (predicted >= -1e-12 * f_scale) stationary = true;
  }
  if (stationary) {
    Vec mult = qr_.size() > 0 ? qr_.multipliers(-gradient()) : Vec(0);
    const Index n_eq = static_cast<Index>(eq_rows_.size());
    int drop = -1;
    double worst = -opt_.mult_tol;
    for (std::size_t j = 0; j < working_.size(); ++j) {
      double lam = mult(n_eq + static_cast<Index>(j));
      if (lam < worst) {
        worst = lam;
        drop = static_cast<int>(j);
      }
    }
    if (drop < 0) {
      nu_ = Vec::Zero(A_eq_.rows());
      for (std::size_t j = 0; j < eq_rows_.size(); ++j)
        nu_(eq_rows_[j]) = mult(static_cast<Index>(j));
      lambda_ = Vec::Zero(A_in_.rows());
      for (std::size_t j = 0; j < working_.size(); ++j)
        lambda_(working_[j]) = std::max(0.0, mult(n_eq + static_cast<Index>(j)));
      return {StepKind::Converged, -1};
    }
    int row = working_[drop];
    qr_.remove(static_cast<Index>(eq_rows_.size()) + drop);
    working_.erase(working_.begin() + drop);
    ++updates_since_refactor_;
    return {StepKind::Dropped, row};
  }

  // Ratio test over non-working inequality rows.
  double alpha = 1.0;
  int block = -1;
  for (Index i = 0; i < A_in_.rows(); ++i) {
    double gp = A_in_.row(i) * p;
    if (gp <= opt_.ratio_dir_tol) continue;
    if (std::find(working_.begin(), working_.end(), static_cast<int>(i)) !=
        working_.end())
      continue;
    double slack = b_in_(i) - A_in_.row(i) * v_;
    double ratio = std::max(0.0, slack) / gp;
    if (ratio < alpha - 1e-12 ||
        (block >= 0 && ratio < alpha + 1e-12 && static_cast<int>(i) < block)) {
      alpha = std::min(alpha, ratio);
      block = static_cast<int>(i);
    }
  }

  if (block < 0) {
    v_ += p;
    stalled_sets_.clear();
    return {StepKind::MovedFull, -1};
  }

  // Cycling control: the same working set recurring at zero step length
  // triggers a one-shot right-hand-side perturbation.
  if (alpha <= 1e-14) {
    std::vector<int> key = working_;
    std::sort(key.begin(), key.end());
    key.push_back(block);
    if (++stalled_sets_[key] >= 3 && !perturbed_) {
      b_in_(block) += 1e-10 * (1.0 + std::abs(b_in_(block)));
      perturbed_ = true;
      stalled_sets_.clear();
      return {StepKind::MovedFull, -1};
    }
  } else {
    stalled_sets_.clear();
  }

  v_ += alpha * p;
  if (!qr_.append(A_in_.row(block).transpose(), opt_.rank_tol)) {
    // The blocking normal is numerically dependent on the working set.
    // Exchange it against a working inequality row that carries a positive
    // coefficient in the dependency; the active geometry is preserved and
    // the iteration can continue instead of aborting.
    Vec y = qr_.multipliers(A_in_.row(block).transpose());
    const Index n_eq = static_cast<Index>(eq_rows_.size());
    int swap = -1;
    double best = opt_.mult_tol;
    for (std::size_t j = 0; j < working_.size(); ++j) {
      double yj = y(n_eq + static_cast<Index>(j));
      if (yj > best) {
        best = yj;
        swap = static_cast<int>(j);
      }
    }
    if (swap < 0)
      throw NumericalError("QpEngine: blocking row dependent on working set");
    qr_.remove(n_eq + swap);
    working_.erase(working_.begin() + swap);
    if (!qr_.append(A_in_.row(block).transpose(), opt_.rank_tol))
      throw NumericalError("QpEngine: blocking row dependent on working set");
  }
  working_.push_back(block);
  ++updates_since_refactor_;
  return {StepKind::Blocked, block};
}

}  // namespace mpcw
