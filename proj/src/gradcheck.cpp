#include "wifipose/gradcheck.hpp"

#include <algorithm>

#include "wifipose/errors.hpp"

namespace wifipose::nnet {

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& loss_at,
                                     std::span<const double> theta, double epsilon,
                                     std::span<const std::size_t> coords) {
  if (!(epsilon > 0.0)) throw DomainError("numeric_gradient: epsilon must be positive");
  std::vector<double> work(theta.begin(), theta.end());
  std::vector<double> g;
  g.reserve(coords.size());
  for (std::size_t i : coords) {
    if (i >= work.size()) throw DomainError("numeric_gradient: coordinate out of range");
    const double orig = work[i];
    work[i] = orig + epsilon;
    const double up = loss_at(work);
    work[i] = orig - epsilon;
    const double down = loss_at(work);
    work[i] = orig;
    g.push_back((up - down) / (2.0 * epsilon));
  }
  return g;
}

std::vector<double> flatten_trainable(const WpnetParams<double>& params) {
  std::vector<double> flat;
  for (const auto& t : params.tensors) {
    if (t.trainable) flat.insert(flat.end(), t.values.begin(), t.values.end());
  }
  return flat;
}

void assign_trainable(WpnetParams<double>& params, std::span<const double> flat) {
  std::size_t k = 0;
  for (auto& t : params.tensors) {
    if (!t.trainable) continue;
    if (k + t.values.size() > flat.size()) throw ShapeError("assign_trainable: flat vector too short");
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(k), t.values.size(), t.values.begin());
    k += t.values.size();
  }
  if (k != flat.size()) throw ShapeError("assign_trainable: flat vector too long");
}

std::vector<double> flatten_gradients(const WpnetParams<double>& params, const Gradients<double>& grads) {
  if (grads.size() != params.tensors.size()) throw ShapeError("flatten_gradients: gradient list does not match");
  std::vector<double> flat;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.tensors[i].trainable) flat.insert(flat.end(), grads[i].begin(), grads[i].end());
  }
  return flat;
}

}  // namespace wifipose::nnet
