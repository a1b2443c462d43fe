#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "wifipose/nnet.hpp"

namespace wifipose::nnet {

/// Central differences (f(theta + eps*e_i) - f(theta - eps*e_i)) / (2*eps) for
/// every index i in `coords`. Throws DomainError unless eps > 0.
std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& loss_at,
                                     std::span<const double> theta, double epsilon,
                                     std::span<const std::size_t> coords);

/// Trainable tensors concatenated in table order.
std::vector<double> flatten_trainable(const WpnetParams<double>& params);
/// Inverse of flatten_trainable. Throws ShapeError on a size mismatch.
void assign_trainable(WpnetParams<double>& params, std::span<const double> flat);
/// Gradients in the same flat layout.
std::vector<double> flatten_gradients(const WpnetParams<double>& params, const Gradients<double>& grads);

}  // namespace wifipose::nnet
