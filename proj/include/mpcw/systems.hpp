#pragma once

#include "mpcw/common.hpp"

namespace mpcw {

struct ContinuousLti {
  Mat A_c;
  Mat B_c;
};

struct DiscreteLti {
  Mat A;
  Mat B;
  double tau = 0.0;
};

/// Halfspace polytope {v : A_mat v <= b}.
struct Polytope {
  Mat A_mat;
  Vec b;

  Index rows() const { return A_mat.rows(); }
  Index dim() const { return A_mat.cols(); }
  bool contains(const Vec& v, double tol = 1e-9) const {
    return ((A_mat * v - b).array() <= tol).all();
  }
};

struct LtiProblemSpec {
  DiscreteLti model;
  Polytope X;   // state constraints
  Polytope U;   // input constraints
  Polytope Xf;  // terminal set
  Mat Q;
  Mat R;
  Mat P;
  int N = 0;

  Index n() const { return model.A.rows(); }
  Index m() const { return model.B.cols(); }
};

enum class BenchmarkId { Sys1 = 1, Sys2 = 2, Sys3 = 3, Sys4 = 4 };

/// Matrix exponential, scaling-and-squaring with an order-18 Taylor series.
Mat expm(const Mat& M);

DiscreteLti discretize_euler(const ContinuousLti& sys, double tau);

/// Triangle-hold (first-order hold) equivalent discretization via the
/// augmented block exponential.
DiscreteLti discretize_foh(const ContinuousLti& sys, double tau);

/// Fixed-point iteration of the Riccati map from P = Q.
Mat solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R);

Mat lqr_gain(const Mat& A, const Mat& B, const Mat& R, const Mat& P_inf);

/// Maximal positively invariant subset of S under x+ = A_cl x, computed by
/// constraint propagation with support-function redundancy pruning. Rows of
/// the result have unit Euclidean norm.
Polytope max_pos_invariant_set(const Mat& A_cl, const Polytope& S);

LtiProblemSpec build_benchmark(BenchmarkId id);

}  // namespace mpcw
