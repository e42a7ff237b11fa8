#include "mpcw/datagen.hpp"

#include "mpcw/lp.hpp"
#include "mpcw/sobol.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mpcw {
namespace {

SampleRecord make_record(const Vec& x, const PrimalDualPoint& point,
                         const SolveStats& stats) {
  SampleRecord rec;
  rec.x = x;
  rec.z_star = point.z;
  rec.nu_star = point.nu;
  rec.lambda_star = point.lambda;
  rec.aux.reserve(stats.working.size());
  for (int i : stats.working) rec.aux.push_back(static_cast<std::uint32_t>(i));
  return rec;
}

std::vector<int> aux_to_hint(const SampleRecord& rec) {
  std::vector<int> hint;
  hint.reserve(rec.aux.size());
  for (std::uint32_t i : rec.aux) hint.push_back(static_cast<int>(i));
  return hint;
}

bool is_box(const Polytope& p) {
  const Index d = p.dim();
  if (p.rows() != 2 * d) return false;
  Mat expected(2 * d, d);
  expected << Mat::Identity(d, d), -Mat::Identity(d, d);
  return (p.A_mat - expected).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

std::pair<Vec, Vec> bounding_box(const Polytope& p) {
  const Index d = p.dim();
  Vec lo(d), hi(d);
  for (Index j = 0; j < d; ++j) {
    auto up = support_function(Vec::Unit(d, j), p.A_mat, p.b);
    auto dn = support_function(-Vec::Unit(d, j), p.A_mat, p.b);
    if (!up || !dn)
      throw InvalidArgument("bounding_box: polytope unbounded along an axis");
    hi(j) = *up;
    lo(j) = -*dn;
  }
  return {lo, hi};
}

std::vector<SampleRecord> line_solve(const BatchQp& qp, const SampleRecord& seed,
                                     const Vec& x_goal, double step_d,
                                     const SolverOptions& opt,
                                     long* total_iters) {
  if (!(step_d > 0.0)) throw InvalidArgument("line_solve: step_d must be > 0");
  std::vector<SampleRecord> out;
  Vec delta = x_goal - seed.x;
  const double dist = delta.norm();
  if (dist == 0.0) return out;
  Vec dir = delta / dist;
  const Index steps = static_cast<Index>(std::ceil(dist / step_d));

  const SampleRecord* prev = &seed;
  for (Index i = 1; i <= steps; ++i) {
    Vec x = seed.x + std::min(static_cast<double>(i) * step_d, dist) * dir;
    std::vector<int> hint = aux_to_hint(*prev);
    auto [point, stats] =
        solve(qp, x, prev->z_star, Termination::optimal(), {}, opt, &hint);
    if (total_iters) *total_iters += stats.phase1_iters + stats.phase2_iters;
    if (stats.status == SolveStatus::Infeasible) break;
    if (stats.status != SolveStatus::Optimal) break;  // conservative stop
    out.push_back(make_record(x, point, stats));
    prev = &out.back();
  }
  return out;
}

std::vector<SampleRecord> random_walk(const BatchQp& qp, const Mat& goals,
                                      std::vector<SampleRecord>& seeds,
                                      double step_d, Rng& rng,
                                      const SolverOptions& opt,
                                      Index* empty_walks) {
  if (seeds.empty()) throw InvalidArgument("random_walk: seed pool empty");
  std::vector<SampleRecord> records;
  for (Index g = 0; g < goals.rows(); ++g) {
    const std::size_t pick = static_cast<std::size_t>(
        rng.uniform_index(static_cast<std::uint64_t>(seeds.size())));
    std::vector<SampleRecord> walk =
        line_solve(qp, seeds[pick], goals.row(g).transpose(), step_d, opt);
    if (walk.empty()) {
      // Re-use the sampled seed: no pool growth on an empty walk.
      if (empty_walks) ++*empty_walks;
      continue;
    }
    seeds.push_back(walk.back());
    for (auto& rec : walk) records.push_back(std::move(rec));
  }
  return records;
}

DatasetBundle generate_data(const BatchQp& qp, const WalkConfig& config,
                            const SolverOptions& opt) {
  const LtiProblemSpec& spec = qp.spec();
  auto [lo, hi] = bounding_box(spec.X);

  WalkConfig cfg = config;
  if (cfg.step_d <= 0.0) cfg.step_d = (hi - lo).minCoeff() / 20.0;
  if (!(cfg.step_d > 0.0))
    throw ConfigError("generate_data: cannot derive a positive step_d");

  // Initial seed: the optimal solve at the origin.
  Vec x0 = Vec::Zero(qp.n());
  auto [p0, s0] = solve(qp, x0, Vec::Zero(qp.d_p()), Termination::optimal(), {}, opt);
  if (s0.status != SolveStatus::Optimal)
    throw ConfigError("generate_data: origin is not a feasible parameter");
  SampleRecord seed0 = make_record(x0, p0, s0);

  Mat goals = sobol(qp.n(), cfg.n_train + cfg.n_buffer + cfg.n_test, lo, hi);
  Rng rng(cfg.seed);
  DatasetBundle bundle;
  bundle.config = cfg;

  std::vector<SampleRecord> pool{seed0};
  bundle.train = random_walk(qp, goals.topRows(cfg.n_train), pool, cfg.step_d,
                             rng, opt, &bundle.empty_walks);
  bundle.train.insert(bundle.train.begin(), seed0);

  const std::size_t train_pool_size = pool.size();
  random_walk(qp, goals.middleRows(cfg.n_train, cfg.n_buffer), pool, cfg.step_d,
              rng, opt, &bundle.empty_walks);  // buffer records discarded

  // Test seeds: S_bf \ S_trn — only the entries added during the buffer stage.
  std::vector<SampleRecord> test_pool(pool.begin() + train_pool_size, pool.end());
  if (test_pool.empty()) test_pool.push_back(pool.back());
  bundle.test = random_walk(qp, goals.bottomRows(cfg.n_test), test_pool,
                            cfg.step_d, rng, opt, &bundle.empty_walks);

  // Keep the emitted x-sets disjoint: drop exact test duplicates of train x.
  std::set<std::vector<double>> train_x;
  for (const auto& rec : bundle.train)
    train_x.insert({rec.x.data(), rec.x.data() + rec.x.size()});
  std::vector<SampleRecord> filtered;
  for (auto& rec : bundle.test)
    if (!train_x.count({rec.x.data(), rec.x.data() + rec.x.size()}))
      filtered.push_back(std::move(rec));
  bundle.test = std::move(filtered);
  return bundle;
}

RejectionResult rejection_rate(const LtiProblemSpec& spec, long sample_count,
                               Rng& rng, int threads) {
  if (sample_count < 1) throw InvalidArgument("rejection_rate: need >= 1 sample");
  const Index n = spec.n();
  Mat xs(sample_count, n);
  if (is_box(spec.X)) {
    Vec hi = spec.X.b.head(n), lo = -spec.X.b.tail(n);
    for (long i = 0; i < sample_count; ++i)
      for (Index j = 0; j < n; ++j) xs(i, j) = rng.uniform(lo(j), hi(j));
  } else {
    // Hit-and-run from the origin for general polytopes.
    Vec x = Vec::Zero(n);
    for (long i = 0; i < sample_count; ++i) {
      for (int s = 0; s < 50; ++s) {
        Vec d(n);
        for (Index j = 0; j < n; ++j) d(j) = rng.normal();
        d.normalize();
        Vec ad = spec.X.A_mat * d;
        Vec slack = spec.X.b - spec.X.A_mat * x;
        double t_lo = -std::numeric_limits<double>::infinity();
        double t_hi = std::numeric_limits<double>::infinity();
        for (Index r = 0; r < ad.size(); ++r) {
          if (ad(r) > 1e-12) t_hi = std::min(t_hi, slack(r) / ad(r));
          else if (ad(r) < -1e-12) t_lo = std::max(t_lo, slack(r) / ad(r));
        }
        x += rng.uniform(t_lo, t_hi) * d;
      }
      xs.row(i) = x.transpose();
    }
  }

  MembershipOracle oracle(spec);
  std::vector<char> ok = oracle.feasible_batch(xs, threads);
  RejectionResult res;
  res.total = sample_count;
  res.feasible = std::count(ok.begin(), ok.end(), char(1));
  res.rate = static_cast<double>(res.feasible) / static_cast<double>(res.total);
  res.half_width =
      1.96 * std::sqrt(res.rate * (1.0 - res.rate) / static_cast<double>(res.total));
  return res;
}

}  // namespace mpcw
