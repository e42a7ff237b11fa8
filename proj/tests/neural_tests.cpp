#include <doctest.h>

#include "mpcw/active_set.hpp"
#include "mpcw/neural.hpp"

#include "helpers.hpp"

using namespace mpcw;

namespace {

std::vector<SampleRecord> make_records(const BatchQp& qp, int count,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SampleRecord> out;
  while (static_cast<int>(out.size()) < count) {
    Vec x(2);
    x << rng.uniform(-4.0, 4.0), rng.uniform(-0.9, 0.9);
    auto [pt, stats] = solve(qp, x, Vec::Zero(qp.d_p()), Termination::optimal());
    if (stats.status != SolveStatus::Optimal) continue;
    SampleRecord rec;
    rec.x = x;
    rec.z_star = pt.z;
    rec.nu_star = pt.nu;
    rec.lambda_star = pt.lambda;
    out.push_back(std::move(rec));
  }
  return out;
}

double perturbed_loss(MlpModel model, const std::vector<SampleRecord>& batch,
                      const BatchQp& qp, std::size_t layer, Index r, Index c,
                      double delta, bool bias) {
  if (bias)
    model.biases[layer](r) += delta;
  else
    model.weights[layer](r, c) += delta;
  return lagrangian_loss(model, batch, qp);
}

}  // namespace

TEST_CASE("gradient matches central finite differences") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 6, 71);
  const std::vector<std::vector<Index>> archs = {
      {2, 30},  // linear
      {2, 8, 30},
      {2, 16, 8, 30},
      {2, 8, 8, 8, 30},
      {2, 32, 32, 30},
  };
  Rng coord_rng(5);
  for (const auto& widths : archs) {
    Rng rng(13);
    MlpModel model = init_model(widths, rng);
    ModelGrad grad = loss_gradient(model, records, qp);
    const double h = 1e-6;
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t layer = coord_rng.uniform_index(model.layer_count());
      const bool bias = coord_rng.uniform() < 0.3;
      const Index r = static_cast<Index>(
          coord_rng.uniform_index(static_cast<std::uint64_t>(model.weights[layer].rows())));
      const Index c = bias ? 0
                           : static_cast<Index>(coord_rng.uniform_index(
                                 static_cast<std::uint64_t>(model.weights[layer].cols())));
      const double plus = perturbed_loss(model, records, qp, layer, r, c, h, bias);
      const double minus = perturbed_loss(model, records, qp, layer, r, c, -h, bias);
      const double fd = (plus - minus) / (2.0 * h);
      const double an = bias ? grad.biases[layer](r) : grad.weights[layer](r, c);
      const double scale = std::max({1.0, std::abs(fd), std::abs(an)});
      CHECK(std::abs(fd - an) / scale < 1e-4);
    }
  }
}

TEST_CASE("loss is zero exactly when the network reproduces z*") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 1, 99);

  // Linear model with zero weights and bias = z*: forward(x) = z* for every x.
  MlpModel exact;
  exact.widths = {2, qp.d_p()};
  exact.weights = {Mat::Zero(qp.d_p(), 2)};
  exact.biases = {records[0].z_star};
  CHECK(lagrangian_loss(exact, records, qp) <= 1e-12);
  CHECK((forward(exact, records[0].x) - records[0].z_star).cwiseAbs().maxCoeff() ==
        0.0);

  // Any primal deviation makes the loss strictly positive: the Lagrangian
  // difference is 0.5 (z - z*)' (2H) (z - z*) at the optimal duals... with
  // H positive definite the quadratic form is strict.
  exact.biases[0](0) += 0.01;
  CHECK(lagrangian_loss(exact, records, qp) > 0.0);
}

TEST_CASE("training reduces the loss and memorizes a small set") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 16, 123);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.seed = 7;
  cfg.validation_fraction = 0.0;
  auto [model, log] = train(records, qp, {2, 32, 30}, cfg);
  REQUIRE(log.train_loss.size() == 301);  // epoch 0 = pre-training loss
  CHECK(log.train_loss.back() < 0.05 * log.train_loss.front());
}

TEST_CASE("training is deterministic given the seed") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 12, 55);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 42;
  auto [m1, l1] = train(records, qp, {2, 8, 30}, cfg);
  auto [m2, l2] = train(records, qp, {2, 8, 30}, cfg);
  for (std::size_t l = 0; l < m1.weights.size(); ++l) {
    CHECK((m1.weights[l] - m2.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m1.biases[l] - m2.biases[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(l1.train_loss == l2.train_loss);

  cfg.seed = 43;
  auto [m3, l3] = train(records, qp, {2, 8, 30}, cfg);
  CHECK((m1.weights[0] - m3.weights[0]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("threaded gradient shards reproduce the serial result") {
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 12, 31);
  TrainConfig serial;
  serial.epochs = 4;
  serial.seed = 3;
  TrainConfig par = serial;
  par.threads = 4;
  auto [m1, l1] = train(records, qp, {2, 8, 30}, serial);
  auto [m2, l2] = train(records, qp, {2, 8, 30}, par);
  for (std::size_t l = 0; l < m1.weights.size(); ++l)
    CHECK((m1.weights[l] - m2.weights[l]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam step hand check on a scalar quadratic") {
  // One-layer, one-weight "network" trained on a single sample where the
  // loss gradient is analytic; verify the first Adam update equals
  // -lr * m_hat / (sqrt(v_hat) + eps) with bias correction at t=1:
  // m_hat = g, v_hat = g^2  =>  step = -lr * g / (|g| + eps).
  BatchQp qp(build_benchmark(BenchmarkId::Sys1));
  auto records = make_records(qp, 1, 200);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.seed = 9;
  cfg.validation_fraction = 0.0;
  std::vector<Index> widths = {2, qp.d_p()};

  Rng rng(cfg.seed);
  MlpModel init = init_model(widths, rng);
  ModelGrad g0 = loss_gradient(init, records, qp);
  auto [trained, log] = train(records, qp, widths, cfg);
  for (Index r = 0; r < init.weights[0].rows(); ++r)
    for (Index c = 0; c < init.weights[0].cols(); ++c) {
      const double g = g0.weights[0](r, c);
      const double expect = init.weights[0](r, c) -
                            cfg.learning_rate * g / (std::abs(g) + cfg.adam_eps);
      CHECK(trained.weights[0](r, c) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("default widths reproduce the published architectures") {
  CHECK(default_widths(2, 30) == std::vector<Index>{2, 32, 32, 30});
  CHECK(default_widths(12, 300) == std::vector<Index>{12, 32, 32, 300});
  CHECK(default_widths(12, 450) == std::vector<Index>{12, 32, 64, 128, 256, 450});
  CHECK(default_widths(36, 2250) ==
        std::vector<Index>{36, 128, 128, 256, 256, 512, 512, 2250});
}
