#pragma once

// Serial direct-loop reference kernels. Slow and obvious; used as the oracle
// for the parallel kernels in tests and as the baseline in the benchmark.

#include <span>

#include "wifipose/kernels.hpp"
#include "wifipose/tensor.hpp"

namespace wifipose::kernels::ref {

template <typename T>
void conv2d_forward(const nn::Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                    const ConvGeometry& g, nn::Tensor4<T>& y);

template <typename T>
void conv2d_backward(const nn::Tensor4<T>& x, std::span<const T> weight, const ConvGeometry& g,
                     const nn::Tensor4<T>& dy, nn::Tensor4<T>* dx, std::span<T> dweight, std::span<T> dbias);

template <typename T>
void batchnorm_forward_train(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta, T eps,
                             nn::Tensor4<T>& y);

}  // namespace wifipose::kernels::ref
