#include "wifipose/preprocess.hpp"

#include <cmath>
#include <string>

#include "wifipose/errors.hpp"

namespace wifipose::preprocess {
namespace {

struct Tap {
  Eigen::Index lo;
  Eigen::Index hi;
  double w;
};

std::vector<Tap> sample_taps(Eigen::Index in, std::size_t out) {
  std::vector<Tap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = out == 1 ? 0.0
                                : static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
    auto lo = static_cast<Eigen::Index>(std::floor(src));
    if (lo >= in - 1) lo = in - 1;
    const Eigen::Index hi = lo + 1 < in ? lo + 1 : lo;
    taps[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Matrix flatten_antennas(const csi::CsiFrame& frame) {
  if (frame.antennas() != csi::kAntennas || frame.subcarriers() != csi::kSubcarriers ||
      frame.packets() != csi::kPacketsPerFrame) {
    throw ShapeError("CSI frame must be 3x114x32, got " + std::to_string(frame.antennas()) + "x" +
                     std::to_string(frame.subcarriers()) + "x" + std::to_string(frame.packets()));
  }
  const std::size_t A = frame.antennas(), S = frame.subcarriers(), T = frame.packets();
  Matrix m(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A * T));
  for (std::size_t a = 0; a < A; ++a) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a * T + t)) = frame.at(a, s, t);
      }
    }
  }
  return m;
}

Matrix bilinear_resize(const Matrix& m, std::size_t out_h, std::size_t out_w) {
  if (m.rows() < 2 || m.cols() < 2) throw DomainError("bilinear_resize needs at least a 2x2 input");
  if (out_h == 0 || out_w == 0) throw DomainError("bilinear_resize output dimensions must be >= 1");

  const auto rows = sample_taps(m.rows(), out_h);
  const auto cols = sample_taps(m.cols(), out_w);
  Matrix out(static_cast<Eigen::Index>(out_h), static_cast<Eigen::Index>(out_w));
  for (std::size_t i = 0; i < out_h; ++i) {
    const Tap& r = rows[i];
    for (std::size_t j = 0; j < out_w; ++j) {
      const Tap& c = cols[j];
      const double top = std::lerp(m(r.lo, c.lo), m(r.lo, c.hi), c.w);
      const double bottom = std::lerp(m(r.hi, c.lo), m(r.hi, c.hi), c.w);
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::lerp(top, bottom, r.w);
    }
  }
  return out;
}

Matrix standardize(const Matrix& m) {
  const double n = static_cast<double>(m.size());
  const double mean = m.sum() / n;
  const double var = (m.array() - mean).square().sum() / n;
  return (m.array() - mean) / (std::sqrt(var) + kStdEpsilon);
}

InputTensor preprocess(const csi::CsiFrame& frame, std::size_t out_size) {
  const Matrix m = standardize(bilinear_resize(flatten_antennas(frame), out_size, out_size));
  InputTensor x;
  x.size = out_size;
  x.data.assign(m.data(), m.data() + m.size());
  return x;
}

}  // namespace wifipose::preprocess
