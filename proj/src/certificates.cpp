#include "mpcw/certificates.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace mpcw {

std::vector<int> active_rows(const BatchQp& qp, const Vec& z, const Vec& x,
                             double tol) {
  Vec resid = qp.G_in() * z - qp.w_in() - qp.E_in() * x;
  std::vector<int> out;
  for (Index i = 0; i < resid.size(); ++i)
    if (std::abs(resid(i)) <= tol) out.push_back(static_cast<int>(i));
  return out;
}

std::pair<Vec, Vec> recover_duals(const BatchQp& qp, const Vec& z,
                                  const std::vector<int>& active, const Vec& x) {
  const Index d_eq = qp.d_eq();
  const Index k = d_eq + static_cast<Index>(active.size());

  // Stacked active-constraint matrix rows; the columns of H_inv_Gt give
  // (1/2) H^{-1} times each row's transpose, so the Gram matrix
  // [G_eq;G_A] H^{-1} [G_eq;G_A]' is assembled from the precompute.
  Mat G_act(k, qp.d_p());
  G_act.topRows(d_eq) = qp.G_eq();
  Mat Hi_act(qp.d_p(), k);
  Hi_act.leftCols(d_eq) = qp.H_inv_Gt().leftCols(d_eq);
  for (std::size_t j = 0; j < active.size(); ++j) {
    G_act.row(d_eq + static_cast<Index>(j)) = qp.G_in().row(active[j]);
    Hi_act.col(d_eq + static_cast<Index>(j)) =
        qp.H_inv_Gt().col(d_eq + active[j]);
  }
  Mat gram = 2.0 * (G_act * Hi_act);  // undo the 1/2 in the precompute
  gram = 0.5 * (gram + gram.transpose());
  Vec rhs = -2.0 * (G_act * z);

  Vec sol;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() == Eigen::Success) {
    sol = llt.solve(rhs);
  } else {
    double reg = 1e-12 * gram.trace() / std::max<Index>(1, k);
    Eigen::LDLT<Mat> ldlt(gram + reg * Mat::Identity(k, k));
    sol = ldlt.solve(rhs);
  }

  Vec nu = sol.head(d_eq);
  Vec lambda = Vec::Zero(qp.d_in());
  for (std::size_t j = 0; j < active.size(); ++j)
    lambda(active[j]) = std::max(0.0, sol(d_eq + static_cast<Index>(j)));
  return {nu, lambda};
}

Certificate certify(const BatchQp& qp, const Vec& z, const Vec& x,
                    double active_tol, double eps_abs) {
  Certificate cert;
  cert.threshold = std::max(x.dot(qp.Qx() * x), eps_abs);
  if (!qp.primal_feasible(z, x)) return cert;  // eta = +inf sentinel
  auto [nu, lambda] = recover_duals(qp, z, active_rows(qp, z, x, active_tol), x);
  cert.nu = nu;
  cert.lambda = lambda;
  cert.eta = qp.duality_gap(z, nu, lambda, x);
  cert.passed = cert.eta <= cert.threshold;
  return cert;
}

CertifierResult default_certifier(const BatchQp& qp, const Vec& x, const Vec& z,
                                  double gap_threshold) {
  Certificate cert;
  if (gap_threshold < 0.0) {
    cert = certify(qp, z, x);
  } else {
    cert = certify(qp, z, x, 1e-7, 0.0);
    cert.passed = qp.primal_feasible(z, x) && cert.eta <= gap_threshold;
  }
  CertifierResult out;
  out.pass = cert.passed;
  out.eta = cert.eta;
  out.nu = cert.nu;
  out.lambda = cert.lambda;
  return out;
}

}  // namespace mpcw
