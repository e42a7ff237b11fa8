#include "mpcw/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpcw {
namespace {

/// Forward pass keeping post-activation values per layer for backprop.
std::vector<Vec> forward_trace(const MlpModel& model, const Vec& x) {
  std::vector<Vec> acts;
  acts.reserve(model.layer_count() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    Vec a = model.weights[l] * acts.back() + model.biases[l];
    if (l + 1 < model.layer_count()) a = a.cwiseMax(0.0);
    acts.push_back(std::move(a));
  }
  return acts;
}

/// Accumulates d(loss)/d(theta) given d(loss)/d(output) for one sample.
void backprop(const MlpModel& model, const std::vector<Vec>& acts,
              const Vec& dout, ModelGrad& grad) {
  Vec delta = dout;
  for (std::size_t l = model.layer_count(); l-- > 0;) {
    grad.weights[l] += delta * acts[l].transpose();
    grad.biases[l] += delta;
    if (l == 0) break;
    delta = model.weights[l].transpose() * delta;
    // ReLU subgradient: 0 at (and below) zero activations.
    delta = (acts[l].array() > 0.0).select(delta, 0.0);
  }
}

ModelGrad zero_grad(const MlpModel& model) {
  ModelGrad g;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    g.weights.push_back(Mat::Zero(model.weights[l].rows(), model.weights[l].cols()));
    g.biases.push_back(Vec::Zero(model.biases[l].size()));
  }
  return g;
}

void sample_gradient(const MlpModel& model, const SampleRecord& rec,
                     const BatchQp& qp, LossKind loss, ModelGrad& grad) {
  std::vector<Vec> acts = forward_trace(model, rec.x);
  const Vec& z_hat = acts.back();
  Vec dout;
  if (loss == LossKind::Lagrangian) {
    double r = qp.lagrangian(z_hat, rec.nu_star, rec.lambda_star, rec.x) -
               qp.lagrangian(rec.z_star, rec.nu_star, rec.lambda_star, rec.x);
    Vec grad_l = 2.0 * (qp.H() * z_hat) + qp.G_eq().transpose() * rec.nu_star +
                 qp.G_in().transpose() * rec.lambda_star;
    dout = 2.0 * r * grad_l;
  } else {
    dout = 2.0 * (z_hat - rec.z_star);
  }
  backprop(model, acts, dout, grad);
}

double sample_loss(const MlpModel& model, const SampleRecord& rec,
                   const BatchQp& qp, LossKind loss) {
  Vec z_hat = forward(model, rec.x);
  if (loss == LossKind::Lagrangian) {
    double r = qp.lagrangian(z_hat, rec.nu_star, rec.lambda_star, rec.x) -
               qp.lagrangian(rec.z_star, rec.nu_star, rec.lambda_star, rec.x);
    return r * r;
  }
  return (z_hat - rec.z_star).squaredNorm();
}

double set_loss(const MlpModel& model, const std::vector<SampleRecord>& set,
                const BatchQp& qp, LossKind loss) {
  double total = 0.0;
  for (const auto& rec : set) total += sample_loss(model, rec, qp, loss);
  return total;
}

}  // namespace

MlpModel init_model(const std::vector<Index>& widths, Rng& rng) {
  if (widths.size() < 2) throw InvalidArgument("init_model: need >= 2 widths");
  MlpModel model;
  model.widths = widths;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const Index fan_in = widths[l], fan_out = widths[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat W(fan_out, fan_in);
    for (Index i = 0; i < fan_out; ++i)
      for (Index j = 0; j < fan_in; ++j) W(i, j) = rng.uniform(-bound, bound);
    model.weights.push_back(std::move(W));
    model.biases.push_back(Vec::Zero(fan_out));
  }
  return model;
}

Vec forward(const MlpModel& model, const Vec& x) {
  if (x.size() != model.input_width())
    throw InvalidArgument("forward: input width mismatch");
  Vec a = x;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    a = model.weights[l] * a + model.biases[l];
    if (l + 1 < model.layer_count()) a = a.cwiseMax(0.0);
  }
  return a;
}

double lagrangian_loss(const MlpModel& model,
                       const std::vector<SampleRecord>& batch,
                       const BatchQp& qp) {
  return set_loss(model, batch, qp, LossKind::Lagrangian);
}

ModelGrad loss_gradient(const MlpModel& model,
                        const std::vector<SampleRecord>& batch,
                        const BatchQp& qp, LossKind loss) {
  ModelGrad grad = zero_grad(model);
  for (const auto& rec : batch) sample_gradient(model, rec, qp, loss, grad);
  return grad;
}

std::vector<Index> default_widths(Index n, Index d_p) {
  if (n <= 2) return {n, 32, 32, d_p};
  if (d_p <= 300) return {n, 32, 32, d_p};
  if (d_p <= 450) return {n, 32, 64, 128, 256, d_p};
  return {n, 128, 128, 256, 256, 512, 512, d_p};
}

std::pair<MlpModel, TrainingLog> train(const std::vector<SampleRecord>& dataset,
                                       const BatchQp& qp,
                                       const std::vector<Index>& widths,
                                       const TrainConfig& config) {
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  if (config.batch_size < 1 || config.epochs < 1 ||
      !(config.learning_rate > 0.0) || config.validation_fraction < 0.0 ||
      config.validation_fraction > 0.25)
    throw InvalidArgument("train: bad config");

  Rng rng(config.seed);
  MlpModel model = init_model(widths, rng);

  // Validation split: trailing fraction of one seeded shuffle.
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  const std::size_t n_val =
      static_cast<std::size_t>(config.validation_fraction * dataset.size());
  std::vector<SampleRecord> train_set, val_set;
  for (std::size_t i = 0; i + n_val < order.size(); ++i)
    train_set.push_back(dataset[order[i]]);
  for (std::size_t i = order.size() - n_val; i < order.size(); ++i)
    val_set.push_back(dataset[order[i]]);

  // Adam state.
  ModelGrad m_state = zero_grad(model), v_state = zero_grad(model);
  long t = 0;
  TrainingLog log;
  log.config = config;

  std::vector<std::size_t> idx(train_set.size());
  std::iota(idx.begin(), idx.end(), 0);

  // Entry 0 is the pre-training loss; entry e the loss after epoch e.
  log.train_loss.push_back(set_loss(model, train_set, qp, config.loss));
  log.val_loss.push_back(set_loss(model, val_set, qp, config.loss));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
    for (std::size_t start = 0; start < idx.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      std::size_t stop = std::min(idx.size(),
                                  start + static_cast<std::size_t>(config.batch_size));
      std::vector<SampleRecord> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(train_set[idx[i]]);

      // Fixed shard decomposition, reduced in shard order: the summation
      // order is identical for every thread count, so threaded runs
      // reproduce the single-threaded result bit for bit.
      ModelGrad grad = zero_grad(model);
      constexpr int W = 8;
      std::vector<ModelGrad> shards;
      for (int w = 0; w < W; ++w) shards.push_back(zero_grad(model));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, config.threads))
#endif
      for (int w = 0; w < W; ++w)
        for (std::size_t i = w; i < batch.size(); i += W)
          sample_gradient(model, batch[i], qp, config.loss, shards[w]);
      for (int w = 0; w < W; ++w)
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
          grad.weights[l] += shards[w].weights[l];
          grad.biases[l] += shards[w].biases[l];
        }

      ++t;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
      const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
      for (std::size_t l = 0; l < model.layer_count(); ++l) {
        auto adam = [&](Mat& theta, Mat& m, Mat& v, const Mat& g) {
          m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
          v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g.cwiseProduct(g);
          theta -= config.learning_rate *
                   ((m / bc1).array() / ((v / bc2).array().sqrt() + config.adam_eps))
                       .matrix();
        };
        adam(model.weights[l], m_state.weights[l], v_state.weights[l],
             grad.weights[l]);
        Mat b = model.biases[l], mb = m_state.biases[l], vb = v_state.biases[l];
        adam(b, mb, vb, Mat(grad.biases[l]));
        model.biases[l] = b;
        m_state.biases[l] = mb;
        v_state.biases[l] = vb;
      }
    }
    double tl = set_loss(model, train_set, qp, config.loss);
    double vl = set_loss(model, val_set, qp, config.loss);
    if (!std::isfinite(tl))
      throw NumericalError("train: loss diverged; lower the learning rate");
    log.train_loss.push_back(tl);
    log.val_loss.push_back(vl);
  }
  return {std::move(model), std::move(log)};
}

}  // namespace mpcw
