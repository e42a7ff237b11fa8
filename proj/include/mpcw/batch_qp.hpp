#pragma once

#include "mpcw/common.hpp"
#include "mpcw/systems.hpp"

#include <Eigen/Cholesky>

namespace mpcw {

/// Primal point z = [x_1 .. x_N, u_0 .. u_{N-1}] with duals (nu, lambda).
struct PrimalDualPoint {
  Vec z;
  Vec nu;
  Vec lambda;

  bool dual_feasible(double tol = 0.0) const {
    return (lambda.array() >= -tol).all();
  }
};

/// Condensed batch mp-QP
///   min_z  z'Hz + x'Qx   s.t.  G_eq z = E_eq x,  G_in z <= w_in + E_in x.
class BatchQp {
 public:
  explicit BatchQp(const LtiProblemSpec& spec);

  Index n() const { return n_; }
  Index m() const { return m_; }
  int N() const { return N_; }
  Index d_p() const { return H_.rows(); }
  Index d_eq() const { return G_eq_.rows(); }
  Index d_in() const { return G_in_.rows(); }

  const Mat& H() const { return H_; }
  const Mat& Qx() const { return Qx_; }
  const Mat& G_eq() const { return G_eq_; }
  const Mat& E_eq() const { return E_eq_; }
  const Mat& G_in() const { return G_in_; }
  const Mat& E_in() const { return E_in_; }
  const Vec& w_in() const { return w_in_; }
  /// Precomputed (1/2) H^{-1} [G_eq; G_in]'.
  const Mat& H_inv_Gt() const { return H_inv_Gt_; }
  const Eigen::LLT<Mat>& H_llt() const { return H_llt_; }
  const LtiProblemSpec& spec() const { return spec_; }

  double objective(const Vec& z, const Vec& x) const;
  double lagrangian(const Vec& z, const Vec& nu, const Vec& lambda,
                    const Vec& x) const;
  /// Closed-form dual objective; sets *dual_feasible (lambda >= 0) if given.
  double dual_objective(const Vec& nu, const Vec& lambda, const Vec& x,
                        bool* dual_feasible = nullptr) const;
  double duality_gap(const Vec& z, const Vec& nu, const Vec& lambda,
                     const Vec& x) const;
  double suboptimality(const Vec& z, const Vec& x, const Vec& z_star) const;

  /// max violation over both constraint families (equalities by |.|).
  double max_violation(const Vec& z, const Vec& x) const;
  bool primal_feasible(const Vec& z, const Vec& x, double tol = 1e-8) const {
    return max_violation(z, x) <= tol;
  }

  /// Stacks a state/input rollout into z layout; with inputs simulated from
  /// x0 under the model dynamics the equality residual is exactly zero.
  Vec rollout(const Vec& x0, const Mat& inputs) const;

 private:
  LtiProblemSpec spec_;
  Index n_, m_;
  int N_;
  Mat H_, Qx_, G_eq_, E_eq_, G_in_, E_in_;
  Vec w_in_;
  Mat H_inv_Gt_;
  Eigen::LLT<Mat> H_llt_;
};

}  // namespace mpcw
