#include "mpcw/systems.hpp"

#include "mpcw/lp.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

namespace mpcw {
namespace {

void normalize_rows(Polytope& p) {
  for (Index i = 0; i < p.rows(); ++i) {
    double s = p.A_mat.row(i).norm();
    if (s <= 0.0) throw InvalidArgument("polytope has a zero row");
    p.A_mat.row(i) /= s;
    p.b(i) /= s;
  }
}

/// Upper shift: ones on the first (block) superdiagonal.
Mat shift_up(Index k) {
  Mat L = Mat::Zero(k, k);
  for (Index i = 0; i + 1 < k; ++i) L(i, i + 1) = 1.0;
  return L;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Polytope box_polytope(const Vec& bound) {
  const Index d = bound.size();
  Polytope p;
  p.A_mat.resize(2 * d, d);
  p.A_mat << Mat::Identity(d, d), -Mat::Identity(d, d);
  p.b.resize(2 * d);
  p.b << bound, bound;
  return p;
}

/// Oscillating-masses continuous dynamics with `half` masses per chain half.
ContinuousLti oscillating_masses(Index half, const Mat& F) {
  const double c = 1.0, d = 0.1, a = -2.0 * c, b = -2.0;
  Mat L = shift_up(half);
  Mat coupling = L + L.transpose();
  ContinuousLti sys;
  sys.A_c = Mat::Zero(2 * half, 2 * half);
  sys.A_c.topRightCorner(half, half).setIdentity();
  sys.A_c.bottomLeftCorner(half, half) = a * Mat::Identity(half, half) + c * coupling;
  sys.A_c.bottomRightCorner(half, half) = b * Mat::Identity(half, half) + d * coupling;
  sys.B_c = Mat::Zero(2 * half, F.cols());
  sys.B_c.bottomRows(half) = F;
  return sys;
}

void finish_spec(LtiProblemSpec& spec) {
  spec.P = solve_dare(spec.model.A, spec.model.B, spec.Q, spec.R);
  Mat K = lqr_gain(spec.model.A, spec.model.B, spec.R, spec.P);
  // Constraint set for the LQR-controlled system: x in X and -Kx in U.
  Polytope S;
  S.A_mat.resize(spec.X.rows() + spec.U.rows(), spec.n());
  S.A_mat << spec.X.A_mat, -spec.U.A_mat * K;
  S.b.resize(spec.X.rows() + spec.U.rows());
  S.b << spec.X.b, spec.U.b;
  spec.Xf = max_pos_invariant_set(spec.model.A - spec.model.B * K, S);
}

}  // namespace

Mat expm(const Mat& M) {
  if (M.rows() != M.cols()) throw InvalidArgument("expm: matrix not square");
  double nrm = M.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  while (nrm > 0.5 && squarings < 64) {
    nrm *= 0.5;
    ++squarings;
  }
  Mat S = M / std::ldexp(1.0, squarings);
  Mat E = Mat::Identity(M.rows(), M.cols());
  Mat term = E;
  for (int k = 1; k <= 18; ++k) {
    term = (term * S) / static_cast<double>(k);
    E += term;
  }
  for (int s = 0; s < squarings; ++s) E = E * E;
  return E;
}

DiscreteLti discretize_euler(const ContinuousLti& sys, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("discretize_euler: tau must be positive");
  const Index n = sys.A_c.rows();
  return {Mat::Identity(n, n) + tau * sys.A_c, tau * sys.B_c, tau};
}

DiscreteLti discretize_foh(const ContinuousLti& sys, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("discretize_foh: tau must be positive");
  const Index n = sys.A_c.rows();
  const Index m = sys.B_c.cols();
  Mat M = Mat::Zero(n + 2 * m, n + 2 * m);
  M.topLeftCorner(n, n) = sys.A_c;
  M.block(0, n, n, m) = sys.B_c;
  M.block(n, n + m, m, m).setIdentity();
  M *= tau;
  Mat E = expm(M);
  Mat phi = E.topLeftCorner(n, n);
  Mat gamma1 = E.block(0, n, n, m);
  Mat gamma2 = E.block(0, n + m, n, m);
  return {phi, gamma1 + phi * gamma2 - gamma2, tau};
}

Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R) {
  Mat P = Q;
  for (int it = 0; it < 10000; ++it) {
    Mat PA = P * A;
    Mat gram = B.transpose() * P * B + R;
    Mat next = A.transpose() * PA + Q -
               PA.transpose() * B * gram.ldlt().solve(B.transpose() * PA);
    next = 0.5 * (next + next.transpose());
    double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (diff <= 1e-12 * (1.0 + P.cwiseAbs().maxCoeff())) return P;
  }
  throw NumericalError("solve_dare: Riccati iteration did not converge"
                       " (non-stabilizable or ill-conditioned pair)");
}

Mat lqr_gain(const Mat& A, const Mat& B, const Mat& R, const Mat& P_inf) {
  Mat gram = B.transpose() * P_inf * B + R;
  return gram.ldlt().solve(B.transpose() * P_inf * A);
}

Polytope max_pos_invariant_set(const Mat& A_cl, const Polytope& S) {
  if (S.dim() != A_cl.rows() || A_cl.rows() != A_cl.cols())
    throw InvalidArgument("max_pos_invariant_set: dimension mismatch");
  if ((S.b.array() <= 0.0).any())
    throw InvalidArgument("max_pos_invariant_set: origin not strictly interior");

  Polytope omega = S;
  normalize_rows(omega);

  // Frontier rows whose one-step propagation has not been tested yet.
  Index frontier_begin = 0;
  for (int sweep = 0; sweep < 500; ++sweep) {
    const Index frontier_end = omega.rows();
    if (frontier_begin == frontier_end) break;
    std::vector<Vec> new_rows;
    std::vector<double> new_b;
    for (Index i = frontier_begin; i < frontier_end; ++i) {
      Vec a = A_cl.transpose() * omega.A_mat.row(i).transpose();
      double beta = omega.b(i);
      double s = a.norm();
      if (s <= 1e-12) continue;
      a /= s;
      beta /= s;
      auto sup = support_function(a, omega.A_mat, omega.b);
      if (sup && *sup <= beta + 1e-9) continue;  // redundant
      new_rows.push_back(a);
      new_b.push_back(beta);
    }
    frontier_begin = frontier_end;
    if (new_rows.empty()) {
      // Converged: final redundancy pass over the accumulated rows.
      Index kept = 0;
      Mat A_acc = omega.A_mat;
      Vec b_acc = omega.b;
      std::vector<char> keep(A_acc.rows(), 1);
      for (Index i = 0; i < A_acc.rows(); ++i) {
        Index others = 0;
        Mat A_rest(A_acc.rows() - 1, A_acc.cols());
        Vec b_rest(A_acc.rows() - 1);
        for (Index j = 0; j < A_acc.rows(); ++j) {
          if (j == i || !keep[j]) continue;
          A_rest.row(others) = A_acc.row(j);
          b_rest(others++) = b_acc(j);
        }
        A_rest.conservativeResize(others, Eigen::NoChange);
        b_rest.conservativeResize(others);
        if (others == 0) continue;
        auto sup = support_function(A_acc.row(i).transpose(), A_rest, b_rest);
        if (sup && *sup <= b_acc(i) + 1e-9) keep[i] = 0;
      }
      for (Index i = 0; i < A_acc.rows(); ++i)
        if (keep[i]) ++kept;
      omega.A_mat.resize(kept, A_acc.cols());
      omega.b.resize(kept);
      Index r = 0;
      for (Index i = 0; i < A_acc.rows(); ++i)
        if (keep[i]) {
          omega.A_mat.row(r) = A_acc.row(i);
          omega.b(r++) = b_acc(i);
        }
      return omega;
    }
    Index old_rows = omega.rows();
    omega.A_mat.conservativeResize(old_rows + static_cast<Index>(new_rows.size()),
                                   Eigen::NoChange);
    omega.b.conservativeResize(old_rows + static_cast<Index>(new_rows.size()));
    for (std::size_t k = 0; k < new_rows.size(); ++k) {
      omega.A_mat.row(old_rows + static_cast<Index>(k)) = new_rows[k].transpose();
      omega.b(old_rows + static_cast<Index>(k)) = new_b[k];
    }
  }
  if (frontier_begin != omega.rows())
    throw NumericalError("max_pos_invariant_set: no convergence in 500 sweeps");
  return omega;  // unreachable; loop either returns or throws
}

LtiProblemSpec build_benchmark(BenchmarkId id) {
  LtiProblemSpec spec;
  switch (id) {
    case BenchmarkId::Sys1: {
      spec.model.A.resize(2, 2);
      spec.model.A << 1, 1, 0, 1;
      spec.model.B.resize(2, 1);
      spec.model.B << 0.5, 1.0;
      spec.model.tau = 1.0;
      spec.Q = Mat::Identity(2, 2);
      spec.R = Mat::Identity(1, 1);
      spec.N = 10;
      Vec bx(4);
      bx << 5, 1, 5, 1;
      spec.X.A_mat.resize(4, 2);
      spec.X.A_mat << Mat::Identity(2, 2), -Mat::Identity(2, 2);
      spec.X.b = bx;
      spec.U = box_polytope(Vec::Constant(1, 1.0));
      break;
    }
    case BenchmarkId::Sys2: {
      // Quadrotor flat-output chain: position, velocity, acceleration, jerk
      // blocks, snap input on the last block.
      ContinuousLti cont{kron(shift_up(4), Mat::Identity(3, 3)),
                         kron(Vec::Unit(4, 3), Mat::Identity(3, 3))};
      spec.model = discretize_euler(cont, 0.15);
      spec.Q = Mat::Identity(12, 12);
      spec.R = Mat::Identity(3, 3);
      spec.N = 20;
      Vec bound(12);
      bound << 10, 10, 10, 2, 2, 2, 1.5, 1.5, 1.5, 2, 2, 2;
      spec.X = box_polytope(bound);
      spec.U = box_polytope(Vec::Constant(3, 1.75));
      break;
    }
    case BenchmarkId::Sys3: {
      Mat F(6, 3);
      F << 1, 0, 0,
          -1, 0, 0,
           0, 1, 0,
           0, 0, 1,
           0, -1, 0,
           0, 0, 1;
      spec.model = discretize_foh(oscillating_masses(6, F), 0.25);
      spec.Q = Mat::Identity(12, 12);
      spec.R = Mat::Identity(3, 3);
      spec.N = 30;
      Vec bound(12);
      bound << Vec::Constant(6, 4.0), Vec::Constant(6, 0.85);
      spec.X = box_polytope(bound);
      spec.U = box_polytope(Vec::Constant(3, 0.5));
      break;
    }
    case BenchmarkId::Sys4: {
      Mat F(6, 3);
      F << 1, 0, 0,
          -1, 0, 0,
           0, 1, 0,
           0, 0, 1,
           0, -1, 0,
           0, 0, 1;
      spec.model = discretize_foh(
          oscillating_masses(18, kron(Mat::Identity(3, 3), F)), 0.26);
      spec.Q = Mat::Identity(36, 36);
      spec.R = Mat::Identity(9, 9);
      spec.N = 50;
      Vec bound(36);
      bound << Vec::Constant(18, 4.0), Vec::Constant(18, 1.55);
      spec.X = box_polytope(bound);
      spec.U = box_polytope(Vec::Constant(9, 0.5));
      break;
    }
    default:
      throw InvalidArgument("build_benchmark: unknown system id");
  }
  finish_spec(spec);
  return spec;
}

}  // namespace mpcw
