#pragma once

// OpenMP-parallel compute kernels for the network. Convolutions lower to
// im2col + GEMM per sample and parallelize over the batch; batch
// normalization parallelizes over channels. Reductions across samples are
// performed in sample order so results do not depend on the thread count.
//
// kernels_ref.hpp holds the serial direct-loop versions used as test oracles.

#include <cstddef>
#include <span>

#include "wifipose/tensor.hpp"

namespace wifipose::kernels {

struct ConvGeometry {
  std::size_t cin = 0, cout = 0, kernel = 3, stride = 1, pad = 1;

  std::size_t out_extent(std::size_t in) const { return (in + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_size() const { return cout * cin * kernel * kernel; }
  nn::Shape4 out_shape(const nn::Shape4& in) const { return {in.n, cout, out_extent(in.h), out_extent(in.w)}; }
};

/// y = conv(x, weight) (+ bias if non-empty). weight is [cout][cin][k][k].
template <typename T>
void conv2d_forward(const nn::Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                    const ConvGeometry& g, nn::Tensor4<T>& y);

/// Accumulates nothing: overwrites dweight (and dbias when non-empty); writes dx
/// when non-null.
template <typename T>
void conv2d_backward(const nn::Tensor4<T>& x, std::span<const T> weight, const ConvGeometry& g,
                     const nn::Tensor4<T>& dy, nn::Tensor4<T>* dx, std::span<T> dweight, std::span<T> dbias);

/// Training-mode batch normalization over (n, h, w) per channel. Fills the
/// per-channel batch mean and 1/sqrt(var + eps) (biased variance).
template <typename T>
void batchnorm_forward_train(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta, T eps,
                             nn::Tensor4<T>& y, std::span<T> mean, std::span<T> inv_std);

template <typename T>
void batchnorm_forward_eval(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta,
                            std::span<const T> running_mean, std::span<const T> running_var, T eps,
                            nn::Tensor4<T>& y);

/// Backward of training-mode batch normalization.
template <typename T>
void batchnorm_backward(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> mean,
                        std::span<const T> inv_std, const nn::Tensor4<T>& dy, nn::Tensor4<T>& dz,
                        std::span<T> dgamma, std::span<T> dbeta);

template <typename T>
void relu_inplace(std::span<T> v);

/// dx = dy where the forward output was positive, else 0. May alias dy.
template <typename T>
void relu_backward(std::span<const T> out, std::span<const T> dy, std::span<T> dx);

}  // namespace wifipose::kernels
