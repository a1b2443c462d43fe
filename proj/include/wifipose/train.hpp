#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wifipose/dataio.hpp"
#include "wifipose/nnet.hpp"

namespace wifipose::train {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr0 = 0.001;
  double momentum = 0.9;
  double lr_gamma = 0.5;
  std::size_t lr_step = 10;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;

  bool operator==(const TrainHistory&) const = default;
};

/// Mean over every entry of (pred - target)^2. Throws ShapeError on size mismatch.
double mse_loss(std::span<const double> pred, std::span<const double> target);
double mse_loss(std::span<const float> pred, std::span<const float> target);

/// lr0 * gamma^floor(epoch / lr_step).
double lr_at(std::size_t epoch, const TrainConfig& cfg);

/// Classical momentum: v <- momentum * v + g; theta <- theta - lr * v.
/// Every gradient is checked before anything is modified; a non-finite entry
/// throws NonFiniteGradientError naming the tensor and leaves params intact.
template <typename T>
void sgd_step(nnet::WpnetParams<T>& params, const nnet::Gradients<T>& grads, nnet::Gradients<T>& velocity, double lr,
              double momentum);

template <typename T>
nnet::Gradients<T> zero_velocity(const nnet::WpnetParams<T>& params);

/// Network inputs and normalized targets for a list of samples.
struct PreparedSet {
  nn::Tensor4<float> inputs;   // [N, 1, S, S]
  nn::Tensor4<float> targets;  // [N, 2, L, 1], a / width and b / height
};

/// Normalized [2 x L] target for the first L joints of `pose`.
std::vector<double> normalize_targets(const pose::PoseLandmarks& pose, std::size_t n_landmarks, double frame_width,
                                      double frame_height);

PreparedSet prepare(const dataio::Dataset& ds, std::span<const std::size_t> ids, const nnet::WpnetConfig& net_cfg);

/// Gathers rows `ids` of a [N, ...] tensor.
nn::Tensor4<float> gather(const nn::Tensor4<float>& t, std::span<const std::size_t> ids);

/// One optimizer step on a batch: training-mode forward, MSE, backward,
/// SGD update and running-statistic update. Returns the batch loss before the step.
template <typename T>
double train_step(nnet::WpnetParams<T>& params, nnet::Gradients<T>& velocity, const nn::Tensor4<T>& inputs,
                  const nn::Tensor4<T>& targets, double lr, double momentum);

/// Evaluation-mode MSE over a prepared set, in chunks of `batch_size`.
double evaluate_loss(const nnet::WpnetParams<float>& params, const PreparedSet& set, std::size_t batch_size);

/// Evaluation-mode predictions [N, 2, L, 1] in chunks of `batch_size`.
nn::Tensor4<float> predict(const nnet::WpnetParams<float>& params, const nn::Tensor4<float>& inputs,
                           std::size_t batch_size);

struct TrainResult {
  nnet::WpnetParams<float> best_params;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Cross-modal supervision loop: per-epoch seeded shuffle of the train split,
/// mini-batches (last partial batch kept), validation loss each epoch, and the
/// parameters of the lowest-validation-loss epoch returned.
TrainResult train(const dataio::Dataset& ds, const dataio::Splits& splits, const nnet::WpnetConfig& net_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Batch order used by `train` for a given epoch: the train ids permuted by a
/// generator seeded from (seed, epoch).
std::vector<std::size_t> epoch_order(std::span<const std::size_t> train_ids, std::uint64_t seed, std::size_t epoch);

}  // namespace wifipose::train
