#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "wifipose/csi.hpp"

namespace wifipose::preprocess {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::size_t kInputSize = 136;
inline constexpr double kStdEpsilon = 1e-8;

/// Single-channel square network input, [1 x size x size], row-major.
struct InputTensor {
  std::size_t size = 0;
  std::vector<double> data;

  double at(std::size_t row, std::size_t col) const { return data[row * size + col]; }
};

/// [antennas x subcarriers x packets] -> [subcarriers x antennas*packets] with
/// M(s, a*P + t) = A(a, s, t).
Matrix flatten_antennas(const csi::CsiFrame& frame);

/// Corner-aligned bilinear resampling. Source coordinate of output row i is
/// i*(H-1)/(out_h-1) (0 when out_h == 1), and likewise for columns.
Matrix bilinear_resize(const Matrix& m, std::size_t out_h, std::size_t out_w);

/// (m - mean) / (std + 1e-8) with population statistics over all entries.
Matrix standardize(const Matrix& m);

/// flatten -> resize to out_size x out_size -> standardize.
InputTensor preprocess(const csi::CsiFrame& frame, std::size_t out_size = kInputSize);

}  // namespace wifipose::preprocess
