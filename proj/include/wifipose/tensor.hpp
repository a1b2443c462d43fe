#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wifipose::nn {

/// NCHW extents.
struct Shape4 {
  std::size_t n = 0, c = 0, h = 0, w = 0;

  std::size_t size() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  std::size_t sample() const { return c * h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
  }
};

template <typename T>
struct Tensor4 {
  Shape4 shape;
  std::vector<T> data;

  Tensor4() = default;
  explicit Tensor4(Shape4 s, T fill = T(0)) : shape(s), data(s.size(), fill) {}

  void resize(Shape4 s) {
    shape = s;
    data.assign(s.size(), T(0));
  }
  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }
  T at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return data[((n * shape.c + c) * shape.h + y) * shape.w + x];
  }
  T* sample(std::size_t n) { return data.data() + n * shape.sample(); }
  const T* sample(std::size_t n) const { return data.data() + n * shape.sample(); }
  std::span<T> values() { return data; }
  std::span<const T> values() const { return data; }
};

}  // namespace wifipose::nn
