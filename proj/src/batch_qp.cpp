#include "mpcw/batch_qp.hpp"

namespace mpcw {

BatchQp::BatchQp(const LtiProblemSpec& spec)
    : spec_(spec), n_(spec.n()), m_(spec.m()), N_(spec.N) {
  if (N_ < 1) throw InvalidArgument("BatchQp: horizon must be >= 1");
  const Index n = n_, m = m_;
  const Index N = N_;
  const Index d_p = N * (n + m);
  const Index c_x = spec.X.rows(), c_u = spec.U.rows(), c_f = spec.Xf.rows();
  const Index d_eq = N * n;
  const Index d_in = N * c_x + c_f + N * c_u;
  if (spec.X.dim() != n || spec.U.dim() != m || spec.Xf.dim() != n ||
      spec.Q.rows() != n || spec.R.rows() != m || spec.P.rows() != n)
    throw InvalidArgument("BatchQp: spec dimension mismatch");

  H_ = Mat::Zero(d_p, d_p);
  for (Index k = 0; k + 1 < N; ++k)
    H_.block(k * n, k * n, n, n) = spec.Q;
  H_.block((N - 1) * n, (N - 1) * n, n, n) = spec.P;
  for (Index k = 0; k < N; ++k)
    H_.block(N * n + k * m, N * n + k * m, m, m) = spec.R;
  Qx_ = spec.Q;

  // Equalities: x_{k+1} - A x_k - B u_k = 0, with x_0 = x the parameter.
  G_eq_ = Mat::Zero(d_eq, d_p);
  E_eq_ = Mat::Zero(d_eq, n);
  for (Index k = 0; k < N; ++k) {
    G_eq_.block(k * n, k * n, n, n).setIdentity();
    if (k > 0) G_eq_.block(k * n, (k - 1) * n, n, n) = -spec.model.A;
    G_eq_.block(k * n, N * n + k * m, n, m) = -spec.model.B;
  }
  E_eq_.topRows(n) = spec.model.A;

  // Inequalities: state rows (first stage handled by the parameter),
  // terminal rows, then input rows.
  G_in_ = Mat::Zero(d_in, d_p);
  E_in_ = Mat::Zero(d_in, n);
  w_in_ = Vec::Zero(d_in);
  // First-stage block 0_{c_x}: constraints A_x x_0 <= b_x depend only on the
  // parameter, kept as rows with zero G coefficients.
  E_in_.topRows(c_x) = -spec.X.A_mat;
  w_in_.head(c_x) = spec.X.b;
  for (Index k = 1; k < N; ++k) {
    G_in_.block(k * c_x, (k - 1) * n, c_x, n) = spec.X.A_mat;
    w_in_.segment(k * c_x, c_x) = spec.X.b;
  }
  G_in_.block(N * c_x, (N - 1) * n, c_f, n) = spec.Xf.A_mat;
  w_in_.segment(N * c_x, c_f) = spec.Xf.b;
  for (Index k = 0; k < N; ++k) {
    G_in_.block(N * c_x + c_f + k * c_u, N * n + k * m, c_u, m) = spec.U.A_mat;
    w_in_.segment(N * c_x + c_f + k * c_u, c_u) = spec.U.b;
  }

  H_llt_.compute(H_);
  if (H_llt_.info() != Eigen::Success)
    throw NumericalError("BatchQp: H is not positive definite");
  Mat Gt(d_p, d_eq + d_in);
  Gt << G_eq_.transpose(), G_in_.transpose();
  H_inv_Gt_ = 0.5 * H_llt_.solve(Gt);
}

double BatchQp::objective(const Vec& z, const Vec& x) const {
  return z.dot(H_ * z) + x.dot(Qx_ * x);
}

double BatchQp::lagrangian(const Vec& z, const Vec& nu, const Vec& lambda,
                           const Vec& x) const {
  return objective(z, x) + nu.dot(G_eq_ * z - E_eq_ * x) +
         lambda.dot(G_in_ * z - w_in_ - E_in_ * x);
}

double BatchQp::dual_objective(const Vec& nu, const Vec& lambda, const Vec& x,
                               bool* dual_feasible) const {
  if (dual_feasible) *dual_feasible = (lambda.array() >= 0.0).all();
  // g = G_eq'nu + G_in'lambda; H_inv_Gt already carries the 1/2 H^{-1}
  // factor, so g'H^{-1}g/4 = g'(H_inv_Gt [nu;lambda])/2.
  Vec stacked(d_eq() + d_in());
  stacked << nu, lambda;
  Vec g = G_eq_.transpose() * nu + G_in_.transpose() * lambda;
  double quad = 0.5 * g.dot(H_inv_Gt_ * stacked);
  return -quad + x.dot(Qx_ * x) - nu.dot(E_eq_ * x) -
         lambda.dot(w_in_ + E_in_ * x);
}

double BatchQp::duality_gap(const Vec& z, const Vec& nu, const Vec& lambda,
                            const Vec& x) const {
  if (!primal_feasible(z, x))
    throw InvalidArgument("duality_gap: z is not primal feasible");
  if ((lambda.array() < 0.0).any())
    throw InvalidArgument("duality_gap: lambda has negative entries");
  return objective(z, x) - dual_objective(nu, lambda, x);
}

double BatchQp::suboptimality(const Vec& z, const Vec& x,
                              const Vec& z_star) const {
  if (!primal_feasible(z, x) || !primal_feasible(z_star, x))
    throw InvalidArgument("suboptimality: infeasible input");
  return objective(z, x) - objective(z_star, x);
}

double BatchQp::max_violation(const Vec& z, const Vec& x) const {
  double eq = d_eq() == 0 ? 0.0 : (G_eq_ * z - E_eq_ * x).cwiseAbs().maxCoeff();
  double in = d_in() == 0 ? 0.0
                          : (G_in_ * z - w_in_ - E_in_ * x).maxCoeff();
  return std::max(eq, std::max(in, 0.0));
}

Vec BatchQp::rollout(const Vec& x0, const Mat& inputs) const {
  if (inputs.rows() != m_ || inputs.cols() != N_ || x0.size() != n_)
    throw InvalidArgument("rollout: dimension mismatch");
  Vec z = Vec::Zero(d_p());
  Vec xk = x0;
  for (Index k = 0; k < N_; ++k) {
    xk = spec_.model.A * xk + spec_.model.B * inputs.col(k);
    z.segment(k * n_, n_) = xk;
    z.segment(N_ * n_ + k * m_, m_) = inputs.col(k);
  }
  return z;
}

}  // namespace mpcw
