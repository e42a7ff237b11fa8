#include "mpcw/active_set.hpp"

#include <algorithm>
#include <cmath>

namespace mpcw {

Phase1Result phase1(const BatchQp& qp, const Vec& x, const Vec& z_init,
                    const SolverOptions& opt) {
  if (z_init.size() != qp.d_p())
    throw InvalidArgument("phase1: z_init has wrong dimension");
  if (qp.primal_feasible(z_init, x, opt.feas_tol))
    return {true, z_init, 0};

  const Index d_p = qp.d_p();
  const Index d_eq = qp.d_eq();
  const Index d_in = qp.d_in();
  Vec r_eq = qp.G_eq() * z_init - qp.E_eq() * x;
  Vec h_in = qp.w_in() + qp.E_in() * x;
  Vec r_in = qp.G_in() * z_init - h_in;

  // Elastic variables: one per equality row, one per violated inequality row.
  std::vector<Index> elastic_in;
  for (Index i = 0; i < d_in; ++i)
    if (r_in(i) > 0.0) elastic_in.push_back(i);
  const Index n_y = d_eq + static_cast<Index>(elastic_in.size());
  const Index dim = d_p + n_y;

  Mat H = Mat::Identity(dim, dim) * opt.phase1_eps;
  Vec c = Vec::Zero(dim);
  c.tail(n_y).setOnes();

  Mat A_eq = Mat::Zero(d_eq, dim);
  A_eq.leftCols(d_p) = qp.G_eq();
  for (Index i = 0; i < d_eq; ++i)
    A_eq(i, d_p + i) = r_eq(i) > 0.0 ? -1.0 : (r_eq(i) < 0.0 ? 1.0 : -1.0);
  Vec b_eq = qp.E_eq() * x;

  Mat A_in = Mat::Zero(d_in + n_y, dim);
  Vec b_in = Vec::Zero(d_in + n_y);
  A_in.topLeftCorner(d_in, d_p) = qp.G_in();
  b_in.head(d_in) = h_in;
  for (std::size_t j = 0; j < elastic_in.size(); ++j)
    A_in(elastic_in[j], d_p + d_eq + static_cast<Index>(j)) = -1.0;
  for (Index j = 0; j < n_y; ++j) A_in(d_in + j, d_p + j) = -1.0;  // y >= 0

  Vec v0 = Vec::Zero(dim);
  v0.head(d_p) = z_init;
  v0.segment(d_p, d_eq) = r_eq.cwiseAbs();
  for (std::size_t j = 0; j < elastic_in.size(); ++j)
    v0(d_p + d_eq + static_cast<Index>(j)) = r_in(elastic_in[j]);

  std::vector<int> hint;
  {
    Vec resid_in = A_in * v0 - b_in;
    for (Index i = 0; i < resid_in.size(); ++i)
      if (std::abs(resid_in(i)) <= opt.active_tol)
        hint.push_back(static_cast<int>(i));
  }

  SolverOptions p1_opt = opt;
  if (p1_opt.max_iter <= 0) p1_opt.max_iter = 50 * static_cast<int>(dim);
  QpEngine engine(H, c, A_eq, b_eq, A_in, b_in, p1_opt);
  engine.start(v0, hint);

  Phase1Result res;
  for (int it = 0; it < p1_opt.max_iter; ++it) {
    Vec z = engine.v().head(d_p);
    if (qp.primal_feasible(z, x, opt.feas_tol)) {
      res.feasible = true;
      res.z0 = z;
      res.iters = engine.iters();
      return res;
    }
    StepOutcome out = engine.step();
    if (out.kind == StepKind::Converged) {
      res.iters = engine.iters();
      Vec z_fin = engine.v().head(d_p);
      double elastic_sum = engine.v().tail(n_y).sum();
      if (elastic_sum <= static_cast<double>(d_in) * opt.feas_tol &&
          qp.primal_feasible(z_fin, x, opt.feas_tol)) {
        res.feasible = true;
        res.z0 = z_fin;
      }
      return res;
    }
  }
  throw NumericalError("phase1: iteration limit exceeded");
}

std::vector<int> init_working_set(const BatchQp& qp, const Vec& x, const Vec& z0,
                                  double tol) {
  Vec resid = qp.G_in() * z0 - qp.w_in() - qp.E_in() * x;
  WorkingQr qr(qp.d_p());
  for (Index i = 0; i < qp.d_eq(); ++i)
    qr.append(qp.G_eq().row(i).transpose());
  std::vector<int> out;
  for (Index i = 0; i < qp.d_in(); ++i)
    if (std::abs(resid(i)) <= tol && qr.append(qp.G_in().row(i).transpose()))
      out.push_back(static_cast<int>(i));
  return out;
}

std::pair<PrimalDualPoint, SolveStats> solve(const BatchQp& qp, const Vec& x,
                                             const Vec& z_init,
                                             Termination criterion,
                                             const Certifier& certifier,
                                             const SolverOptions& opt,
                                             const std::vector<int>* working_hint) {
  const bool needs_cert = criterion.kind == TermKind::FeasibleAndSuboptimal ||
                          criterion.kind == TermKind::FixedGap;
  if (needs_cert && !certifier)
    throw InvalidArgument("solve: termination criterion requires a certifier");
  // gap threshold passed to the certifier; negative means "use x'Qx".
  const double gap_threshold =
      criterion.kind == TermKind::FixedGap ? criterion.threshold : -1.0;

  PrimalDualPoint point;
  point.nu = Vec::Zero(qp.d_eq());
  point.lambda = Vec::Zero(qp.d_in());
  SolveStats stats;

  Phase1Result p1 = phase1(qp, x, z_init, opt);
  stats.phase1_iters = p1.iters;
  if (!p1.feasible) {
    point.z = z_init;
    stats.status = SolveStatus::Infeasible;
    return {point, stats};
  }
  point.z = p1.z0;
  std::vector<int> hint = working_hint
                              ? *working_hint
                              : init_working_set(qp, x, point.z, opt.active_tol);

  if (criterion.kind == TermKind::PrimalFeasible) {
    stats.status = SolveStatus::Feasible;
    stats.working = hint;
    return {point, stats};
  }
  if (needs_cert) {
    CertifierResult cert = certifier(qp, x, point.z, gap_threshold);
    if (cert.pass) {
      point.nu = cert.nu;
      point.lambda = cert.lambda;
      stats.status = SolveStatus::Certified;
      stats.working = hint;
      return {point, stats};
    }
  }

  SolverOptions p2_opt = opt;
  if (p2_opt.max_iter <= 0) p2_opt.max_iter = 50 * static_cast<int>(qp.d_p());
  QpEngine engine(qp.H(), Vec::Zero(qp.d_p()), qp.G_eq(), qp.E_eq() * x,
                  qp.G_in(), qp.w_in() + qp.E_in() * x, p2_opt);
  engine.start(point.z, hint);

  for (int it = 0; it < p2_opt.max_iter; ++it) {
    StepOutcome out = engine.step();
    ++stats.phase2_iters;
    point.z = engine.v();
    if (out.kind == StepKind::Converged) {
      point.nu = engine.nu();
      point.lambda = engine.lambda();
      stats.status = SolveStatus::Optimal;
      stats.rhs_perturbed = engine.rhs_perturbed();
      stats.working = engine.working();
      return {point, stats};
    }
    if (needs_cert) {
      CertifierResult cert = certifier(qp, x, point.z, gap_threshold);
      if (cert.pass) {
        point.nu = cert.nu;
        point.lambda = cert.lambda;
        stats.status = SolveStatus::Certified;
        stats.rhs_perturbed = engine.rhs_perturbed();
        stats.working = engine.working();
        return {point, stats};
      }
    }
  }
  stats.status = SolveStatus::IterLimit;
  stats.rhs_perturbed = engine.rhs_perturbed();
  stats.working = engine.working();
  return {point, stats};
}

}  // namespace mpcw
