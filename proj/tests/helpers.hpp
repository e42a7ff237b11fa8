#pragma once

#include "mpcw/batch_qp.hpp"
#include "mpcw/common.hpp"
#include "mpcw/systems.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace mpcw::test {

// Brute-force oracle for  min v'Hv + c'v  s.t. A_eq v = b_eq, A_in v <= b_in.
// Enumerates every working set of at most max_active inequality rows, solves
// the KKT equality system, and keeps the best primal-feasible candidate.
// Independent of the production solver: dense LU on the full KKT block.
struct EnumerationResult {
  bool found = false;
  double value = std::numeric_limits<double>::infinity();
  Vec v;
};

inline EnumerationResult enumerate_qp(const Mat& H, const Vec& c,
                                      const Mat& A_eq, const Vec& b_eq,
                                      const Mat& A_in, const Vec& b_in,
                                      int max_active, double feas_tol = 1e-8) {
  const Index n = H.rows();
  const Index p = A_eq.rows();
  const Index q = A_in.rows();
  EnumerationResult best;

  std::vector<int> subset;
  auto try_subset = [&]() {
    const Index k = p + static_cast<Index>(subset.size());
    Mat kkt = Mat::Zero(n + k, n + k);
    Vec rhs(n + k);
    kkt.topLeftCorner(n, n) = 2.0 * H;
    rhs.head(n) = -c;
    Mat G(k, n);
    Vec g(k);
    G.topRows(p) = A_eq;
    g.head(p) = b_eq;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      G.row(p + static_cast<Index>(i)) = A_in.row(subset[i]);
      g(p + static_cast<Index>(i)) = b_in(subset[i]);
    }
    if (k > 0) {
      kkt.topRightCorner(n, k) = G.transpose();
      kkt.bottomLeftCorner(k, n) = G;
      rhs.tail(k) = g;
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) return;
    Vec sol = lu.solve(rhs);
    Vec v = sol.head(n);
    if (p > 0 && (A_eq * v - b_eq).cwiseAbs().maxCoeff() > feas_tol) return;
    if (q > 0 && ((A_in * v - b_in).array() > feas_tol).any()) return;
    double value = v.dot(H * v) + c.dot(v);
    if (value < best.value) {
      best.found = true;
      best.value = value;
      best.v = v;
    }
  };

  // Depth-first enumeration of index subsets in ascending order.
  auto recurse = [&](auto&& self, int start) -> void {
    try_subset();
    if (static_cast<int>(subset.size()) >= max_active) return;
    for (int i = start; i < static_cast<int>(q); ++i) {
      subset.push_back(i);
      self(self, i + 1);
      subset.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

// Small random strictly convex QP with a known strictly feasible point at
// v_int; dimensions kept tiny so the enumeration oracle stays cheap.
struct RandomQp {
  Mat H;
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Mat A_in;
  Vec b_in;
  Vec v_start;  // feasible start for the engine
};

inline RandomQp make_random_qp(Rng& rng, Index n, Index q, Index p = 0) {
  RandomQp qp;
  Mat M(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) M(i, j) = rng.normal();
  qp.H = M * M.transpose() + 0.3 * Mat::Identity(n, n);
  qp.c = Vec::NullaryExpr(n, [&](Index) { return rng.normal(); });
  Vec v_int = Vec::NullaryExpr(n, [&](Index) { return 0.5 * rng.normal(); });
  qp.A_in.resize(q, n);
  qp.b_in.resize(q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < n; ++j) qp.A_in(i, j) = rng.normal();
    qp.b_in(i) = qp.A_in.row(i) * v_int + rng.uniform(0.05, 1.5);
  }
  qp.A_eq.resize(p, n);
  qp.b_eq.resize(p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < n; ++j) qp.A_eq(i, j) = rng.normal();
    qp.b_eq(i) = qp.A_eq.row(i) * v_int;
  }
  qp.v_start = v_int;
  return qp;
}

// Random small benchmark-shaped problem (stable if requested) for tests that
// need a full LtiProblemSpec beyond the four named systems.
inline LtiProblemSpec make_random_spec(Rng& rng, Index n, Index m, int N) {
  Mat A(n, n), B(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) A(i, j) = rng.normal();
  // scale to spectral radius ~0.95 via the power-iteration norm bound
  A *= 0.95 / std::max(1e-9, A.cwiseAbs().rowwise().sum().maxCoeff());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) B(i, j) = rng.normal();

  Mat Mq(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) Mq(i, j) = 0.3 * rng.normal();
  LtiProblemSpec spec;
  spec.model = {A, B, 0.0};
  spec.Q = Mq * Mq.transpose() + Mat::Identity(n, n);
  spec.R = Mat::Identity(m, m);
  spec.N = N;

  auto box = [&](Index d, double lo, double hi) {
    Polytope p;
    p.A_mat.resize(2 * d, d);
    p.A_mat << Mat::Identity(d, d), -Mat::Identity(d, d);
    p.b = Vec::NullaryExpr(2 * d, [&](Index) { return rng.uniform(lo, hi); });
    return p;
  };
  spec.X = box(n, 1.0, 3.0);
  spec.U = box(m, 0.8, 2.0);

  spec.P = solve_dare(A, B, spec.Q, spec.R);
  Mat K = lqr_gain(A, B, spec.R, spec.P);
  Polytope pre;
  pre.A_mat.resize(spec.X.rows() + spec.U.rows(), n);
  pre.A_mat << spec.X.A_mat, -spec.U.A_mat * K;
  pre.b.resize(spec.X.rows() + spec.U.rows());
  pre.b << spec.X.b, spec.U.b;
  spec.Xf = max_pos_invariant_set(A - B * K, pre);
  return spec;
}

}  // namespace mpcw::test
