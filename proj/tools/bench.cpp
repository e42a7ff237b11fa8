// Compares the serial reference paths against the OpenMP-parallel kernels:
// membership batch queries, open-loop evaluation, and one training epoch.
// Run with a --threads argument to pick the parallel lane width.

#include "mpcw/datagen.hpp"
#include "mpcw/membership.hpp"
#include "mpcw/neural.hpp"
#include "mpcw/planner.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>

using namespace mpcw;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mat uniform_states(const Polytope& box, long count, Rng& rng) {
  auto [lo, hi] = bounding_box(box);
  Mat xs(count, lo.size());
  for (long j = 0; j < count; ++j)
    for (Index i = 0; i < lo.size(); ++i)
      xs(j, i) = rng.uniform(lo(i), hi(i));
  return xs;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 2;
  int sys = 2;
  for (int i = 1; i < argc - 1; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0) threads = std::atoi(argv[i + 1]);
    if (std::strcmp(argv[i], "--sys") == 0) sys = std::atoi(argv[i + 1]);
  }
  std::cout << "system " << sys << ", parallel lanes: " << threads << "\n\n";

  LtiProblemSpec spec = build_benchmark(static_cast<BenchmarkId>(sys));
  BatchQp qp(spec);
  Rng rng(7);

  {
    const long count = 20000;
    Mat xs = uniform_states(spec.X, count, rng);
    MembershipOracle serial(spec), parallel(spec);
    auto t0 = Clock::now();
    std::vector<char> a = serial.feasible_batch(xs, 1);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    std::vector<char> b = parallel.feasible_batch(xs, threads);
    double tp = seconds_since(t0);
    std::cout << "membership batch (" << count << " states): serial " << ts
              << "s, parallel " << tp << "s, speedup " << ts / tp
              << (a == b ? "" : "  [MISMATCH]") << "\n";
  }

  WalkConfig wc;
  wc.n_train = 40;
  wc.n_buffer = 10;
  wc.n_test = 10;
  wc.seed = 7;
  DatasetBundle bundle = generate_data(qp, wc);
  std::cout << "dataset: " << bundle.train.size() << " train / "
            << bundle.test.size() << " test records\n";

  {
    std::vector<Termination> crit = {Termination::optimal()};
    auto t0 = Clock::now();
    auto a = open_loop_eval(qp, bundle.test, nullptr, crit, {}, 1);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto b = open_loop_eval(qp, bundle.test, nullptr, crit, {}, threads);
    double tp = seconds_since(t0);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      same = a[i].mean_iters == b[i].mean_iters &&
             a[i].mean_sigma == b[i].mean_sigma;
    std::cout << "open-loop eval (" << bundle.test.size()
              << " records): serial " << ts << "s, parallel " << tp
              << "s, speedup " << ts / tp << (same ? "" : "  [MISMATCH]")
              << "\n";
  }

  {
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 7;
    auto t0 = Clock::now();
    tc.threads = 1;
    auto [m1, l1] = train(bundle.train, qp, default_widths(qp.n(), qp.d_p()), tc);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    tc.threads = threads;
    auto [m2, l2] = train(bundle.train, qp, default_widths(qp.n(), qp.d_p()), tc);
    double tp = seconds_since(t0);
    double drift = 0.0;
    for (std::size_t l = 0; l < m1.weights.size(); ++l)
      drift = std::max(drift,
                       (m1.weights[l] - m2.weights[l]).cwiseAbs().maxCoeff());
    std::cout << "training (" << tc.epochs << " epochs): serial " << ts
              << "s, parallel " << tp << "s, speedup " << ts / tp
              << ", weight drift " << drift << "\n";
  }
  return 0;
}
