#pragma once

#include "mpcw/batch_qp.hpp"
#include "mpcw/common.hpp"
#include "mpcw/sample.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpcw {

/// ReLU multilayer perceptron; hidden layers are followed by max(0, .), the
/// output layer is linear.
struct MlpModel {
  std::vector<Index> widths;  // input, hidden..., output
  std::vector<Mat> weights;   // weights[l]: widths[l+1] x widths[l]
  std::vector<Vec> biases;

  Index input_width() const { return widths.front(); }
  Index output_width() const { return widths.back(); }
  std::size_t layer_count() const { return weights.size(); }
};

enum class LossKind { Lagrangian, PrimalL2 };

struct TrainConfig {
  int batch_size = 128;
  int epochs = 100;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  double validation_fraction = 0.05;  // trailing part of a seeded shuffle
  LossKind loss = LossKind::Lagrangian;
  int threads = 1;
};

struct TrainingLog {
  std::vector<double> train_loss;  // per epoch, summed over samples
  std::vector<double> val_loss;
  TrainConfig config;
};

/// Xavier-uniform weights, zero biases; seeded.
MlpModel init_model(const std::vector<Index>& widths, Rng& rng);

Vec forward(const MlpModel& model, const Vec& x);

/// Sum over the batch of (L(forward(x_i)) - L(z*_i))^2 with the record duals.
double lagrangian_loss(const MlpModel& model,
                       const std::vector<SampleRecord>& batch,
                       const BatchQp& qp);

struct ModelGrad {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

ModelGrad loss_gradient(const MlpModel& model,
                        const std::vector<SampleRecord>& batch,
                        const BatchQp& qp,
                        LossKind loss = LossKind::Lagrangian);

std::pair<MlpModel, TrainingLog> train(const std::vector<SampleRecord>& dataset,
                                       const BatchQp& qp,
                                       const std::vector<Index>& widths,
                                       const TrainConfig& config);

/// Default architectures (Sys. 1-4) keyed by state dimension/output width.
std::vector<Index> default_widths(Index n, Index d_p);

}  // namespace mpcw
