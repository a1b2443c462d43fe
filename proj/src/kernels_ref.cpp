#include "wifipose/kernels_ref.hpp"

#include <cmath>
#include <vector>

#include "wifipose/errors.hpp"

namespace wifipose::kernels::ref {

template <typename T>
void conv2d_forward(const nn::Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                    const ConvGeometry& g, nn::Tensor4<T>& y) {
  if (x.shape.c != g.cin || weight.size() != g.weight_size()) throw ShapeError("ref conv2d: shape mismatch");
  const nn::Shape4 ys = g.out_shape(x.shape);
  y.resize(ys);
  const long H = static_cast<long>(x.shape.h), W = static_cast<long>(x.shape.w);
  const long k = static_cast<long>(g.kernel), s = static_cast<long>(g.stride), p = static_cast<long>(g.pad);
  for (std::size_t n = 0; n < ys.n; ++n) {
    for (std::size_t co = 0; co < ys.c; ++co) {
      for (std::size_t oy = 0; oy < ys.h; ++oy) {
        for (std::size_t ox = 0; ox < ys.w; ++ox) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[co]);
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            for (long ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(oy) * s - p + ky;
              if (iy < 0 || iy >= H) continue;
              for (long kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(ox) * s - p + kx;
                if (ix < 0 || ix >= W) continue;
                const T w = weight[((co * g.cin + ci) * g.kernel + static_cast<std::size_t>(ky)) * g.kernel +
                                   static_cast<std::size_t>(kx)];
                acc += static_cast<double>(w) *
                       static_cast<double>(x.at(n, ci, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)));
              }
            }
          }
          y.at(n, co, oy, ox) = static_cast<T>(acc);
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const nn::Tensor4<T>& x, std::span<const T> weight, const ConvGeometry& g,
                     const nn::Tensor4<T>& dy, nn::Tensor4<T>* dx, std::span<T> dweight, std::span<T> dbias) {
  const nn::Shape4 ys = g.out_shape(x.shape);
  if (dy.shape != ys || weight.size() != g.weight_size() || dweight.size() != g.weight_size()) {
    throw ShapeError("ref conv2d_backward: shape mismatch");
  }
  std::vector<double> dw(g.weight_size(), 0.0), dxx(x.shape.size(), 0.0), db(g.cout, 0.0);
  const long H = static_cast<long>(x.shape.h), W = static_cast<long>(x.shape.w);
  const long k = static_cast<long>(g.kernel), s = static_cast<long>(g.stride), p = static_cast<long>(g.pad);
  for (std::size_t n = 0; n < ys.n; ++n) {
    for (std::size_t co = 0; co < ys.c; ++co) {
      for (std::size_t oy = 0; oy < ys.h; ++oy) {
        for (std::size_t ox = 0; ox < ys.w; ++ox) {
          const double g_out = dy.at(n, co, oy, ox);
          db[co] += g_out;
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            for (long ky = 0; ky < k; ++ky) {
              const long iy = static_cast<long>(oy) * s - p + ky;
              if (iy < 0 || iy >= H) continue;
              for (long kx = 0; kx < k; ++kx) {
                const long ix = static_cast<long>(ox) * s - p + kx;
                if (ix < 0 || ix >= W) continue;
                const std::size_t wi = ((co * g.cin + ci) * g.kernel + static_cast<std::size_t>(ky)) * g.kernel +
                                       static_cast<std::size_t>(kx);
                const std::size_t xi = ((n * x.shape.c + ci) * x.shape.h + static_cast<std::size_t>(iy)) * x.shape.w +
                                       static_cast<std::size_t>(ix);
                dw[wi] += g_out * static_cast<double>(x.data[xi]);
                dxx[xi] += g_out * static_cast<double>(weight[wi]);
              }
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < dw.size(); ++i) dweight[i] = static_cast<T>(dw[i]);
  if (!dbias.empty()) {
    for (std::size_t c = 0; c < g.cout; ++c) dbias[c] = static_cast<T>(db[c]);
  }
  if (dx != nullptr) {
    dx->resize(x.shape);
    for (std::size_t i = 0; i < dxx.size(); ++i) dx->data[i] = static_cast<T>(dxx[i]);
  }
}

template <typename T>
void batchnorm_forward_train(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta, T eps,
                             nn::Tensor4<T>& y) {
  const auto& s = z.shape;
  y.resize(s);
  const double M = static_cast<double>(s.n * s.h * s.w);
  for (std::size_t c = 0; c < s.c; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j) sum += z.at(n, c, i, j);
    const double mu = sum / M;
    double var = 0.0;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j) var += (z.at(n, c, i, j) - mu) * (z.at(n, c, i, j) - mu);
    var /= M;
    for (std::size_t n = 0; n < s.n; ++n)
      for (std::size_t i = 0; i < s.h; ++i)
        for (std::size_t j = 0; j < s.w; ++j)
          y.at(n, c, i, j) =
              static_cast<T>(gamma[c] * (z.at(n, c, i, j) - mu) / std::sqrt(var + static_cast<double>(eps)) + beta[c]);
  }
}

template void conv2d_forward<float>(const nn::Tensor4<float>&, std::span<const float>, std::span<const float>,
                                    const ConvGeometry&, nn::Tensor4<float>&);
template void conv2d_forward<double>(const nn::Tensor4<double>&, std::span<const double>, std::span<const double>,
                                     const ConvGeometry&, nn::Tensor4<double>&);
template void conv2d_backward<float>(const nn::Tensor4<float>&, std::span<const float>, const ConvGeometry&,
                                     const nn::Tensor4<float>&, nn::Tensor4<float>*, std::span<float>,
                                     std::span<float>);
template void conv2d_backward<double>(const nn::Tensor4<double>&, std::span<const double>, const ConvGeometry&,
                                      const nn::Tensor4<double>&, nn::Tensor4<double>*, std::span<double>,
                                      std::span<double>);
template void batchnorm_forward_train<float>(const nn::Tensor4<float>&, std::span<const float>,
                                             std::span<const float>, float, nn::Tensor4<float>&);
template void batchnorm_forward_train<double>(const nn::Tensor4<double>&, std::span<const double>,
                                              std::span<const double>, double, nn::Tensor4<double>&);

}  // namespace wifipose::kernels::ref
