#pragma once

#include "mpcw/active_set.hpp"
#include "mpcw/batch_qp.hpp"

#include <vector>

namespace mpcw {

struct Certificate {
  double eta = std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  bool passed = false;
  Vec nu;
  Vec lambda;
};

/// Inequality rows with |residual| <= tol at z.
std::vector<int> active_rows(const BatchQp& qp, const Vec& z, const Vec& x,
                             double tol = 1e-7);

/// Least-squares dual recovery from the reduced KKT normal system of the
/// active constraints, with the nonnegativity clamp on lambda.
std::pair<Vec, Vec> recover_duals(const BatchQp& qp, const Vec& z,
                                  const std::vector<int>& active, const Vec& x);

/// Suboptimality certificate: recovers duals and passes iff the duality gap
/// eta <= max(x'Qx, eps_abs). Infeasible z fails with eta = +inf.
Certificate certify(const BatchQp& qp, const Vec& z, const Vec& x,
                    double active_tol = 1e-7, double eps_abs = 0.0);

/// Adapter for active_set::solve; a negative gap_threshold selects the
/// Thm.-1 bound x'Qx, otherwise the fixed threshold is used.
CertifierResult default_certifier(const BatchQp& qp, const Vec& x, const Vec& z,
                                  double gap_threshold);

}  // namespace mpcw
