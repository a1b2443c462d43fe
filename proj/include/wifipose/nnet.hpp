#pragma once

// WPNet: a residual convolutional regressor from a 1 x S x S CSI tensor to
// 2 x L landmark coordinates.
//
//   stem      3x3 conv -> BN -> ReLU                       C0 x S x S
//   stage 2   basic residual blocks x b0                   C0 x S x S
//   stage 3   basic residual blocks x b1, first stride 2   C1 x S/2 x S/2
//   stage 4   basic residual blocks x b2, first stride 2   C2 x S/4 x S/4
//   stage 5   basic residual blocks x b3, first stride 2   C3 x S/8 x S/8
//   head      1x1 conv C3 -> 2 (+bias), mean over one spatial axis -> 2 x L
//
// A basic block is conv3x3-BN-ReLU-conv3x3-BN, added to the shortcut, then
// ReLU. Stride-2 blocks use a 1x1 stride-2 conv + BN projection shortcut.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wifipose/kernels.hpp"
#include "wifipose/preprocess.hpp"
#include "wifipose/tensor.hpp"

namespace wifipose::nnet {

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct WpnetConfig {
  std::size_t base_channels = 64;
  std::array<std::size_t, 4> block_counts{3, 4, 6, 3};
  std::size_t input_size = 136;
  std::size_t n_landmarks = 17;
  double width_multiplier = 1.0;
  /// Average the bottleneck output over its last spatial axis (rows index
  /// landmarks). false averages over the first axis instead.
  bool pool_last_axis = true;

  /// Throws ConfigError.
  void validate() const;
  /// Channel width of stages 2..5; the stem matches stage 2.
  std::array<std::size_t, 4> stage_channels() const;

  /// 4/4/8/16/32 channels, 24x24 input, 3 landmarks. Used for gradient checks.
  static WpnetConfig tiny();

  bool operator==(const WpnetConfig&) const = default;
};

template <typename T>
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> values;
  bool trainable = true;

  bool operator==(const NamedTensor&) const = default;
};

/// All tensors of a network, in a fixed order derived from the config.
/// Batch-norm running statistics are carried as non-trainable tensors.
template <typename T>
struct WpnetParams {
  WpnetConfig config;
  std::uint64_t seed = 0;
  std::vector<NamedTensor<T>> tensors;

  std::size_t index_of(const std::string& name) const;
  NamedTensor<T>& operator[](const std::string& name) { return tensors[index_of(name)]; }
  const NamedTensor<T>& operator[](const std::string& name) const { return tensors[index_of(name)]; }
  std::size_t trainable_count() const;

  bool operator==(const WpnetParams&) const = default;
};

template <typename To, typename From>
WpnetParams<To> cast_params(const WpnetParams<From>& p);

/// He-initialized parameters; BN scale 1, offset 0, running mean 0, var 1; head bias 0.
template <typename T>
WpnetParams<T> build_wpnet(const WpnetConfig& config, std::uint64_t seed);

/// Number of convolution weight tensors the config produces.
std::size_t conv_tensor_count(const WpnetParams<float>& p);
std::size_t conv_tensor_count(const WpnetParams<double>& p);

enum class Mode { kTrain, kEval };

/// Output extents of one named stage of the forward pass.
struct StageShape {
  std::string name;
  std::size_t c = 0, h = 0, w = 0;
  bool operator==(const StageShape&) const = default;
};

template <typename T>
struct ConvBnCache {
  nn::Tensor4<T> z;
  std::vector<T> mean, inv_std;
};

template <typename T>
struct BlockCache {
  ConvBnCache<T> c1, c2, proj;
  nn::Tensor4<T> a1;
  nn::Tensor4<T> out;
};

/// Activations retained by a training-mode forward pass for backward.
template <typename T>
struct ForwardCache {
  nn::Tensor4<T> input;
  ConvBnCache<T> stem;
  nn::Tensor4<T> stem_out;
  std::vector<BlockCache<T>> blocks;
  nn::Tensor4<T> head;  // bottleneck output before pooling
};

/// Gradients aligned with WpnetParams::tensors; empty for non-trainable tensors.
template <typename T>
using Gradients = std::vector<std::vector<T>>;

/// Batched forward pass. x is [N, 1, S, S]; the result is [N, 2, L, 1].
/// In kTrain mode BN uses batch statistics and, when `cache` is non-null,
/// everything backward needs is stored there. `trace` receives block output
/// shapes.
template <typename T>
nn::Tensor4<T> forward_batch(const WpnetParams<T>& params, const nn::Tensor4<T>& x, Mode mode,
                             ForwardCache<T>* cache = nullptr, std::vector<StageShape>* trace = nullptr);

/// Gradient of sum(d_out * output) with respect to every trainable tensor.
template <typename T>
Gradients<T> backward_batch(const WpnetParams<T>& params, const ForwardCache<T>& cache, const nn::Tensor4<T>& d_out);

/// Folds the batch statistics in `cache` into the running statistics.
template <typename T>
void update_running_stats(WpnetParams<T>& params, const ForwardCache<T>& cache, double momentum = kBatchNormMomentum);

/// [2 x L]: row 0 holds a (x), row 1 holds b (y), both normalized to [0, 1] of the frame.
struct LandmarkPrediction {
  std::size_t n_landmarks = 0;
  std::vector<double> coords;

  double a(std::size_t i) const { return coords[i]; }
  double b(std::size_t i) const { return coords[n_landmarks + i]; }
};

/// Single-input evaluation-mode forward pass.
template <typename T>
LandmarkPrediction forward(const WpnetParams<T>& params, const preprocess::InputTensor& x);

/// Verifies that a 1x1 convolution over a C x H x W map equals applying the
/// same C -> C' matrix independently at each spatial site (within 1e-6).
/// `kernel` is [C' x C] row-major, `feature_map` is [C x H x W].
bool pointwise_equiv_check(std::span<const double> kernel, std::size_t out_channels,
                           std::span<const double> feature_map, std::size_t channels, std::size_t height,
                           std::size_t width);

/// Writes `dir`/checkpoint.json (config, seed, tensor table) and
/// `dir`/tensors.f32 (little-endian float32, tensors concatenated in table order).
void save_checkpoint(const WpnetParams<float>& params, const std::filesystem::path& dir);
WpnetParams<float> load_checkpoint(const std::filesystem::path& dir);

}  // namespace wifipose::nnet
