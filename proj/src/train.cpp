#include "wifipose/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "wifipose/errors.hpp"
#include "wifipose/random.hpp"

namespace wifipose::train {
namespace {

template <typename T>
double mse_impl(std::span<const T> pred, std::span<const T> target) {
  if (pred.size() != target.size()) {
    throw ShapeError("mse_loss: prediction has " + std::to_string(pred.size()) + " entries, target has " +
                     std::to_string(target.size()));
  }
  if (pred.empty()) throw ShapeError("mse_loss: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || lr_step == 0) throw ConfigError("epochs, batch_size and lr_step must be positive");
  if (!(lr0 > 0.0)) throw ConfigError("lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) throw ConfigError("lr_gamma must be in (0, 1]");
}

double mse_loss(std::span<const double> pred, std::span<const double> target) { return mse_impl(pred, target); }
double mse_loss(std::span<const float> pred, std::span<const float> target) { return mse_impl(pred, target); }

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.lr_gamma, static_cast<double>(epoch / cfg.lr_step));
}

template <typename T>
nnet::Gradients<T> zero_velocity(const nnet::WpnetParams<T>& params) {
  nnet::Gradients<T> v(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.tensors[i].trainable) v[i].assign(params.tensors[i].values.size(), T(0));
  }
  return v;
}

template <typename T>
void sgd_step(nnet::WpnetParams<T>& params, const nnet::Gradients<T>& grads, nnet::Gradients<T>& velocity, double lr,
              double momentum) {
  if (grads.size() != params.tensors.size() || velocity.size() != params.tensors.size()) {
    throw ShapeError("sgd_step: gradient list does not match parameters");
  }
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (!params.tensors[i].trainable) continue;
    if (grads[i].size() != params.tensors[i].values.size() || velocity[i].size() != grads[i].size()) {
      throw ShapeError("sgd_step: shape mismatch for '" + params.tensors[i].name + "'");
    }
    for (T g : grads[i]) {
      if (!std::isfinite(g)) throw NonFiniteGradientError(params.tensors[i].name);
    }
  }
  const T m = static_cast<T>(momentum), step = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (!params.tensors[i].trainable) continue;
    auto& theta = params.tensors[i].values;
    auto& v = velocity[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      v[k] = m * v[k] + g[k];
      theta[k] -= step * v[k];
    }
  }
}

std::vector<double> normalize_targets(const pose::PoseLandmarks& pose, std::size_t n_landmarks, double frame_width,
                                      double frame_height) {
  if (n_landmarks > pose::kJointCount) throw ConfigError("n_landmarks exceeds the 17 annotated joints");
  std::vector<double> t(2 * n_landmarks);
  for (std::size_t i = 0; i < n_landmarks; ++i) {
    t[i] = pose[i].x / frame_width;
    t[n_landmarks + i] = pose[i].y / frame_height;
  }
  return t;
}

PreparedSet prepare(const dataio::Dataset& ds, std::span<const std::size_t> ids, const nnet::WpnetConfig& net_cfg) {
  const std::size_t N = ids.size(), S = net_cfg.input_size, L = net_cfg.n_landmarks;
  PreparedSet set{nn::Tensor4<float>({N, 1, S, S}), nn::Tensor4<float>({N, 2, L, 1})};

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(N); ++k) {
    const auto& sample = ds.samples.at(ids[static_cast<std::size_t>(k)]);
    const auto x = preprocess::preprocess(sample.csi, S);
    std::transform(x.data.begin(), x.data.end(), set.inputs.sample(static_cast<std::size_t>(k)),
                   [](double v) { return static_cast<float>(v); });
    const auto t = normalize_targets(sample.annotation, L, ds.manifest.frame_width, ds.manifest.frame_height);
    std::transform(t.begin(), t.end(), set.targets.sample(static_cast<std::size_t>(k)),
                   [](double v) { return static_cast<float>(v); });
  }
  return set;
}

nn::Tensor4<float> gather(const nn::Tensor4<float>& t, std::span<const std::size_t> ids) {
  nn::Shape4 s = t.shape;
  s.n = ids.size();
  nn::Tensor4<float> out(s);
  const std::size_t per = s.sample();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] >= t.shape.n) throw std::out_of_range("gather: row index out of range");
    std::copy_n(t.sample(ids[k]), per, out.sample(k));
  }
  return out;
}

template <typename T>
double train_step(nnet::WpnetParams<T>& params, nnet::Gradients<T>& velocity, const nn::Tensor4<T>& inputs,
                  const nn::Tensor4<T>& targets, double lr, double momentum) {
  nnet::ForwardCache<T> cache;
  const auto pred = nnet::forward_batch(params, inputs, nnet::Mode::kTrain, &cache);
  if (pred.shape != targets.shape) throw ShapeError("train_step: target shape " + targets.shape.str());
  const double loss = mse_impl<T>(pred.values(), targets.values());

  nn::Tensor4<T> d_out(pred.shape);
  const double scale = 2.0 / static_cast<double>(pred.data.size());
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    d_out.data[i] = static_cast<T>(scale * (static_cast<double>(pred.data[i]) - static_cast<double>(targets.data[i])));
  }
  const auto grads = nnet::backward_batch(params, cache, d_out);
  sgd_step(params, grads, velocity, lr, momentum);
  nnet::update_running_stats(params, cache);
  return loss;
}

nn::Tensor4<float> predict(const nnet::WpnetParams<float>& params, const nn::Tensor4<float>& inputs,
                           std::size_t batch_size) {
  const std::size_t N = inputs.shape.n, L = params.config.n_landmarks;
  nn::Tensor4<float> out({N, 2, L, 1});
  std::vector<std::size_t> ids;
  for (std::size_t start = 0; start < N; start += batch_size) {
    ids.clear();
    for (std::size_t k = start; k < std::min(N, start + batch_size); ++k) ids.push_back(k);
    const auto pred = nnet::forward_batch(params, gather(inputs, ids), nnet::Mode::kEval);
    std::copy(pred.data.begin(), pred.data.end(), out.sample(start));
  }
  return out;
}

double evaluate_loss(const nnet::WpnetParams<float>& params, const PreparedSet& set, std::size_t batch_size) {
  const auto pred = predict(params, set.inputs, batch_size);
  return mse_loss(pred.values(), set.targets.values());
}

std::vector<std::size_t> epoch_order(std::span<const std::size_t> train_ids, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(train_ids.begin(), train_ids.end());
  std::mt19937_64 gen(rng::splitmix64(seed ^ rng::splitmix64(epoch + 0x5eed)));
  rng::shuffle(std::span<std::size_t>(order), gen);
  return order;
}

TrainResult train(const dataio::Dataset& ds, const dataio::Splits& splits, const nnet::WpnetConfig& net_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  net_cfg.validate();
  if (splits.train.empty()) throw ConfigError("train split is empty");
  if (splits.val.empty()) throw ConfigError("validation split is empty");

  const PreparedSet train_set = prepare(ds, splits.train, net_cfg);
  const PreparedSet val_set = prepare(ds, splits.val, net_cfg);
  // Positions into `train_set`, shuffled each epoch.
  std::vector<std::size_t> positions(splits.train.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;

  auto params = nnet::build_wpnet<float>(net_cfg, cfg.seed);
  auto velocity = zero_velocity(params);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> batch_ids;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    const auto order = epoch_order(positions, cfg.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(end));
      double loss = 0.0;
      try {
        loss = train_step(params, velocity, gather(train_set.inputs, batch_ids), gather(train_set.targets, batch_ids),
                          lr, cfg.momentum);
      } catch (const NonFiniteGradientError&) {
        throw TrainingDivergedError(epoch);
      }
      if (!std::isfinite(loss)) throw TrainingDivergedError(epoch);
      loss_sum += loss * static_cast<double>(end - start);
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), evaluate_loss(params, val_set, cfg.batch_size),
                    lr};
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) throw TrainingDivergedError(epoch);
    result.history.epochs.push_back(rec);
    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      result.history.best_epoch = epoch;
      result.best_params = params;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

template void sgd_step<float>(nnet::WpnetParams<float>&, const nnet::Gradients<float>&, nnet::Gradients<float>&,
                              double, double);
template void sgd_step<double>(nnet::WpnetParams<double>&, const nnet::Gradients<double>&, nnet::Gradients<double>&,
                               double, double);
template nnet::Gradients<float> zero_velocity<float>(const nnet::WpnetParams<float>&);
template nnet::Gradients<double> zero_velocity<double>(const nnet::WpnetParams<double>&);
template double train_step<float>(nnet::WpnetParams<float>&, nnet::Gradients<float>&, const nn::Tensor4<float>&,
                                  const nn::Tensor4<float>&, double, double);
template double train_step<double>(nnet::WpnetParams<double>&, nnet::Gradients<double>&, const nn::Tensor4<double>&,
                                   const nn::Tensor4<double>&, double, double);

}  // namespace wifipose::train
