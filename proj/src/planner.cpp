#include "mpcw/planner.hpp"

#include "mpcw/certificates.hpp"
#include "mpcw/systems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mpcw {
namespace {

double plan_iters(const PlanResult& r) {
  return static_cast<double>(r.phase1_iters + r.phase2_iters);
}

struct SigmaAcc {
  double sum = 0.0, worst = 0.0;
  long count = 0, excluded = 0;
  void add(double j, double j_star) {
    if (std::abs(j_star) <= 1e-9) {
      ++excluded;
      return;
    }
    double sigma = (j - j_star) / j_star;
    sum += sigma;
    worst = std::max(worst, sigma);
    ++count;
  }
};

}  // namespace

Termination parse_criterion(const std::string& text) {
  if (text == "pf") return Termination::primal_feasible();
  if (text == "pfsub") return Termination::feasible_and_suboptimal();
  if (text == "optimal") return Termination::optimal();
  if (text.rfind("gap:", 0) == 0) {
    std::size_t pos = 0;
    double thr;
    try {
      thr = std::stod(text.substr(4), &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad criterion threshold: " + text);
    }
    if (pos != text.size() - 4 || !(thr >= 0.0))
      throw ConfigError("bad criterion threshold: " + text);
    return Termination::fixed_gap(thr);
  }
  throw ConfigError("unknown criterion: " + text +
                    " (expected pf, pfsub, gap:<t>, optimal)");
}

std::string criterion_name(const Termination& t) {
  switch (t.kind) {
    case TermKind::PrimalFeasible: return "pf";
    case TermKind::FeasibleAndSuboptimal: return "pfsub";
    case TermKind::Optimal: return "optimal";
    case TermKind::FixedGap: {
      std::ostringstream os;
      os << "gap:" << t.threshold;
      return os.str();
    }
  }
  return "?";
}

PlanResult explicit_implicit_plan(const BatchQp& qp, const Vec& x,
                                  const MlpModel* model, Termination criterion,
                                  const SolverOptions& opt) {
  Vec z_init = model ? forward(*model, x) : Vec(Vec::Zero(qp.d_p()));
  auto [point, stats] =
      solve(qp, x, z_init, criterion, default_certifier, opt);

  PlanResult res;
  res.nn_used = model != nullptr;
  res.phase1_iters = stats.phase1_iters;
  res.phase2_iters = stats.phase2_iters;
  res.status = stats.status;
  if (stats.status == SolveStatus::Infeasible) {
    res.infeasible = true;
    return res;
  }
  res.z = point.z;
  res.u0 = point.z.segment(static_cast<Index>(qp.N()) * qp.n(), qp.m());
  if (point.dual_feasible())
    res.eta = qp.duality_gap(point.z, point.nu, point.lambda, x);
  res.certified = stats.status == SolveStatus::Certified ||
                  (stats.status == SolveStatus::Optimal &&
                   res.eta <= x.dot(qp.Qx() * x) + 1e-12);
  return res;
}

std::vector<MetricRow> open_loop_eval(const BatchQp& qp,
                                      const std::vector<SampleRecord>& test,
                                      const MlpModel* model,
                                      const std::vector<Termination>& criteria,
                                      const SolverOptions& opt, int threads) {
  std::vector<MetricRow> rows;
  std::vector<const MlpModel*> modes{nullptr};
  if (model) modes.insert(modes.begin(), model);
  const Index count = static_cast<Index>(test.size());
  for (const MlpModel* mode : modes) {
    for (const Termination& crit : criteria) {
      std::vector<double> iters(count), j_val(count), j_star(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
#endif
      for (Index i = 0; i < count; ++i) {
        const SampleRecord& rec = test[i];
        PlanResult plan = explicit_implicit_plan(qp, rec.x, mode, crit, opt);
        iters[i] = plan_iters(plan);
        j_val[i] = plan.infeasible ? std::numeric_limits<double>::quiet_NaN()
                                   : qp.objective(plan.z, rec.x);
        j_star[i] = qp.objective(rec.z_star, rec.x);
      }
      MetricRow row;
      row.init_mode = mode ? "nn" : "cold";
      row.criterion = criterion_name(crit);
      SigmaAcc acc;
      double it_sum = 0.0;
      for (Index i = 0; i < count; ++i) {
        it_sum += iters[i];
        row.worst_iters = std::max(row.worst_iters, iters[i]);
        if (std::isfinite(j_val[i])) acc.add(j_val[i], j_star[i]);
      }
      row.mean_iters = count > 0 ? it_sum / static_cast<double>(count) : 0.0;
      row.mean_sigma = acc.count > 0 ? acc.sum / static_cast<double>(acc.count) : 0.0;
      row.worst_sigma = acc.worst;
      row.count = acc.count;
      row.excluded = acc.excluded;
      rows.push_back(row);
    }
  }
  return rows;
}

Trajectory closed_loop_simulate(const BatchQp& qp, const Vec& x0,
                                const MlpModel* model, Termination criterion,
                                const SolverOptions& opt, int max_steps) {
  const LtiProblemSpec& spec = qp.spec();
  Mat K = lqr_gain(spec.model.A, spec.model.B, spec.R, spec.P);

  Trajectory traj;
  Vec x = x0;
  traj.states.push_back(x);
  for (int t = 0; t < max_steps; ++t) {
    if (spec.Xf.contains(x)) {
      // LQR handoff: the infinite-horizon tail cost is exact inside O_inf.
      traj.entered_Xf_at = t;
      traj.J_cl += x.dot(spec.P * x);
      return traj;
    }
    PlanResult plan = explicit_implicit_plan(qp, x, model, criterion, opt);
    if (plan.infeasible)
      throw NumericalError(
          "closed_loop_simulate: QP infeasible mid-trajectory "
          "(recursive feasibility violated)");
    traj.step_stats.push_back(plan);
    Vec u = plan.u0;
    traj.J_cl += x.dot(spec.Q * x) + u.dot(spec.R * u);
    x = spec.model.A * x + spec.model.B * u;
    traj.inputs.push_back(u);
    traj.states.push_back(x);
  }
  return traj;  // entered_Xf_at empty: stability test fails loudly upstream
}

std::vector<ClosedLoopRow> closed_loop_eval(const BatchQp& qp,
                                            const MlpModel* model,
                                            const std::vector<Termination>& criteria,
                                            const std::vector<Vec>& x0_set,
                                            const SolverOptions& opt,
                                            int max_steps, int threads) {
  const Index count = static_cast<Index>(x0_set.size());
  std::vector<double> j_opt(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
#endif
  for (Index i = 0; i < count; ++i)
    j_opt[i] = closed_loop_simulate(qp, x0_set[i], nullptr,
                                    Termination::optimal(), opt, max_steps)
                   .J_cl;

  std::vector<ClosedLoopRow> rows;
  std::vector<const MlpModel*> modes{nullptr};
  if (model) modes.insert(modes.begin(), model);
  for (const MlpModel* mode : modes) {
    for (const Termination& crit : criteria) {
      std::vector<double> first(count, 0.0), rest(count, 0.0), jcl(count, 0.0);
      std::vector<double> rest_worst(count, 0.0);
      std::vector<long> rest_n(count, 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
#endif
      for (Index i = 0; i < count; ++i) {
        Trajectory traj =
            closed_loop_simulate(qp, x0_set[i], mode, crit, opt, max_steps);
        jcl[i] = traj.J_cl;
        for (std::size_t s = 0; s < traj.step_stats.size(); ++s) {
          double it = plan_iters(traj.step_stats[s]);
          if (s == 0) {
            first[i] = it;
          } else {
            rest[i] += it;
            rest_worst[i] = std::max(rest_worst[i], it);
            ++rest_n[i];
          }
        }
      }
      ClosedLoopRow row;
      row.init_mode = mode ? "nn" : "cold";
      row.criterion = criterion_name(crit);
      row.trajectories = count;
      SigmaAcc acc;
      double first_sum = 0.0, rest_sum = 0.0;
      long rest_total = 0;
      for (Index i = 0; i < count; ++i) {
        first_sum += first[i];
        row.worst_first_iters = std::max(row.worst_first_iters, first[i]);
        rest_sum += rest[i];
        rest_total += rest_n[i];
        row.worst_rest_iters = std::max(row.worst_rest_iters, rest_worst[i]);
        acc.add(jcl[i], j_opt[i]);
      }
      row.mean_first_iters =
          count > 0 ? first_sum / static_cast<double>(count) : 0.0;
      row.mean_rest_iters =
          rest_total > 0 ? rest_sum / static_cast<double>(rest_total) : 0.0;
      row.mean_sigma_cl = acc.count > 0 ? acc.sum / static_cast<double>(acc.count) : 0.0;
      row.worst_sigma_cl = acc.worst;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace mpcw
