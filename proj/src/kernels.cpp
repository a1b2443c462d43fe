#include "wifipose/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <Eigen/Core>

#include "wifipose/errors.hpp"

namespace wifipose::kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-thread scratch that only grows, so repeated calls do not re-fault pages.
template <typename T>
T* scratch(std::size_t slot, std::size_t count) {
  thread_local std::vector<T> buffers[2];
  auto& b = buffers[slot];
  if (b.size() < count) b.resize(count);
  return b.data();
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

template <typename T>
void im2col(const T* x, std::size_t C, std::size_t H, std::size_t W, const ConvGeometry& g, std::size_t OH,
            std::size_t OW, T* col) {
  const std::size_t k = g.kernel, P = OH * OW;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto stride = static_cast<std::ptrdiff_t>(g.stride);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col + ((c * k + ky) * k + kx) * P;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        // Output columns whose input column lies inside [0, W).
        std::ptrdiff_t lo = 0, hi = static_cast<std::ptrdiff_t>(OW);
        while (lo < hi && lo * stride + dx < 0) ++lo;
        while (hi > lo && (hi - 1) * stride + dx >= static_cast<std::ptrdiff_t>(W)) --hi;
        for (std::size_t oy = 0; oy < OH; ++oy) {
          T* dst = row + oy * OW;
          const auto iy = static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) {
            std::fill(dst, dst + OW, T(0));
            continue;
          }
          const T* src = x + (c * H + static_cast<std::size_t>(iy)) * W;
          std::fill(dst, dst + lo, T(0));
          if (stride == 1) {
            std::copy(src + lo + dx, src + hi + dx, dst + lo);
          } else {
            for (std::ptrdiff_t ox = lo; ox < hi; ++ox) dst[ox] = src[ox * stride + dx];
          }
          std::fill(dst + hi, dst + OW, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, std::size_t C, std::size_t H, std::size_t W, const ConvGeometry& g, std::size_t OH,
            std::size_t OW, T* x) {
  const std::size_t k = g.kernel, P = OH * OW;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto stride = static_cast<std::ptrdiff_t>(g.stride);
  std::fill(x, x + C * H * W, T(0));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col + ((c * k + ky) * k + kx) * P;
        const auto dx = static_cast<std::ptrdiff_t>(kx) - pad;
        std::ptrdiff_t lo = 0, hi = static_cast<std::ptrdiff_t>(OW);
        while (lo < hi && lo * stride + dx < 0) ++lo;
        while (hi > lo && (hi - 1) * stride + dx >= static_cast<std::ptrdiff_t>(W)) --hi;
        for (std::size_t oy = 0; oy < OH; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy) * stride - pad + static_cast<std::ptrdiff_t>(ky);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          const T* src = row + oy * OW;
          T* dst = x + (c * H + static_cast<std::size_t>(iy)) * W;
          for (std::ptrdiff_t ox = lo; ox < hi; ++ox) dst[ox * stride + dx] += src[ox];
        }
      }
    }
  }
}

void check_conv_args(const nn::Shape4& xs, std::size_t weight_size, const ConvGeometry& g) {
  if (xs.c != g.cin) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, kernel expects " + std::to_string(g.cin));
  }
  if (weight_size != g.weight_size()) throw ShapeError("conv2d: weight size mismatch");
  if (xs.h + 2 * g.pad < g.kernel || xs.w + 2 * g.pad < g.kernel) throw ShapeError("conv2d: input smaller than kernel");
}

}  // namespace

template <typename T>
void conv2d_forward(const nn::Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias,
                    const ConvGeometry& g, nn::Tensor4<T>& y) {
  check_conv_args(x.shape, weight.size(), g);
  if (!bias.empty() && bias.size() != g.cout) throw ShapeError("conv2d: bias size mismatch");
  const nn::Shape4 ys = g.out_shape(x.shape);
  if (y.shape != ys) y.resize(ys);

  const std::size_t K = g.cin * g.kernel * g.kernel, P = ys.plane();
  const Eigen::Map<const RowMat<T>> Wm(weight.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(K));
  const auto N = static_cast<std::ptrdiff_t>(x.shape.n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < N; ++n) {
    const T* xn = x.sample(static_cast<std::size_t>(n));
    const T* col = xn;
    if (!is_pointwise(g)) {
      T* buf = scratch<T>(0, K * P);
      im2col(xn, g.cin, x.shape.h, x.shape.w, g, ys.h, ys.w, buf);
      col = buf;
    }
    const Eigen::Map<const RowMat<T>> Cm(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    Eigen::Map<RowMat<T>> Ym(y.sample(static_cast<std::size_t>(n)), static_cast<Eigen::Index>(g.cout),
                             static_cast<Eigen::Index>(P));
    Ym.noalias() = Wm * Cm;
    if (!bias.empty()) {
      for (std::size_t c = 0; c < g.cout; ++c) Ym.row(static_cast<Eigen::Index>(c)).array() += bias[c];
    }
  }
}

template <typename T>
void conv2d_backward(const nn::Tensor4<T>& x, std::span<const T> weight, const ConvGeometry& g,
                     const nn::Tensor4<T>& dy, nn::Tensor4<T>* dx, std::span<T> dweight, std::span<T> dbias) {
  check_conv_args(x.shape, weight.size(), g);
  const nn::Shape4 ys = g.out_shape(x.shape);
  if (dy.shape != ys) throw ShapeError("conv2d_backward: dy shape " + dy.shape.str() + " != " + ys.str());
  if (dweight.size() != g.weight_size()) throw ShapeError("conv2d_backward: dweight size mismatch");
  if (dx != nullptr && dx->shape != x.shape) dx->resize(x.shape);

  const std::size_t K = g.cin * g.kernel * g.kernel, P = ys.plane(), WS = g.weight_size();
  const std::size_t N = x.shape.n;
  const Eigen::Map<const RowMat<T>> Wm(weight.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(K));

  // Per-sample weight gradients, summed in sample order afterwards.
  std::vector<T> partial(N * WS);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ni = 0; ni < static_cast<std::ptrdiff_t>(N); ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    const T* xn = x.sample(n);
    const T* col = xn;
    if (!is_pointwise(g)) {
      T* buf = scratch<T>(0, K * P);
      im2col(xn, g.cin, x.shape.h, x.shape.w, g, ys.h, ys.w, buf);
      col = buf;
    }
    const Eigen::Map<const RowMat<T>> Cm(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    const Eigen::Map<const RowMat<T>> dYm(dy.sample(n), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(P));
    Eigen::Map<RowMat<T>> dWm(partial.data() + n * WS, static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(K));
    dWm.noalias() = dYm * Cm.transpose();

    if (dx != nullptr) {
      if (is_pointwise(g)) {
        Eigen::Map<RowMat<T>> dXm(dx->sample(n), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
        dXm.noalias() = Wm.transpose() * dYm;
      } else {
        T* dcol = scratch<T>(1, K * P);
        Eigen::Map<RowMat<T>> dCm(dcol, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
        dCm.noalias() = Wm.transpose() * dYm;
        col2im(dcol, g.cin, x.shape.h, x.shape.w, g, ys.h, ys.w, dx->sample(n));
      }
    }
  }

  std::fill(dweight.begin(), dweight.end(), T(0));
  for (std::size_t n = 0; n < N; ++n) {
    const T* p = partial.data() + n * WS;
    for (std::size_t i = 0; i < WS; ++i) dweight[i] += p[i];
  }

  if (!dbias.empty()) {
    if (dbias.size() != g.cout) throw ShapeError("conv2d_backward: dbias size mismatch");
    for (std::size_t c = 0; c < g.cout; ++c) {
      double acc = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* d = dy.sample(n) + c * P;
        for (std::size_t p = 0; p < P; ++p) acc += d[p];
      }
      dbias[c] = static_cast<T>(acc);
    }
  }
}

template <typename T>
void batchnorm_forward_train(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta, T eps,
                             nn::Tensor4<T>& y, std::span<T> mean, std::span<T> inv_std) {
  const auto& s = z.shape;
  if (gamma.size() != s.c || beta.size() != s.c || mean.size() != s.c || inv_std.size() != s.c) {
    throw ShapeError("batchnorm: parameter size mismatch");
  }
  if (y.shape != s) y.resize(s);
  const std::size_t P = s.plane();
  const double M = static_cast<double>(s.n * P);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(s.c); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    double sum = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = z.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) sum += p[i];
    }
    const double mu = sum / M;
    double sq = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = z.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) {
        const double d = p[i] - mu;
        sq += d * d;
      }
    }
    const double istd = 1.0 / std::sqrt(sq / M + static_cast<double>(eps));
    mean[c] = static_cast<T>(mu);
    inv_std[c] = static_cast<T>(istd);
    const T scale = static_cast<T>(gamma[c] * istd);
    const T shift = static_cast<T>(beta[c] - gamma[c] * mu * istd);
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = z.sample(n) + c * P;
      T* q = y.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) q[i] = p[i] * scale + shift;
    }
  }
}

template <typename T>
void batchnorm_forward_eval(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> beta,
                            std::span<const T> running_mean, std::span<const T> running_var, T eps,
                            nn::Tensor4<T>& y) {
  const auto& s = z.shape;
  if (gamma.size() != s.c || beta.size() != s.c || running_mean.size() != s.c || running_var.size() != s.c) {
    throw ShapeError("batchnorm: parameter size mismatch");
  }
  if (y.shape != s) y.resize(s);
  const std::size_t P = s.plane();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(s.c); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const double istd = 1.0 / std::sqrt(static_cast<double>(running_var[c]) + static_cast<double>(eps));
    const T scale = static_cast<T>(gamma[c] * istd);
    const T shift = static_cast<T>(beta[c] - gamma[c] * running_mean[c] * istd);
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* p = z.sample(n) + c * P;
      T* q = y.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) q[i] = p[i] * scale + shift;
    }
  }
}

template <typename T>
void batchnorm_backward(const nn::Tensor4<T>& z, std::span<const T> gamma, std::span<const T> mean,
                        std::span<const T> inv_std, const nn::Tensor4<T>& dy, nn::Tensor4<T>& dz,
                        std::span<T> dgamma, std::span<T> dbeta) {
  const auto& s = z.shape;
  if (dy.shape != s) throw ShapeError("batchnorm_backward: dy shape mismatch");
  if (dz.shape != s) dz.resize(s);
  const std::size_t P = s.plane();
  const double M = static_cast<double>(s.n * P);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(s.c); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const double mu = mean[c], istd = inv_std[c];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* zp = z.sample(n) + c * P;
      const T* dp = dy.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) {
        sum_dy += dp[i];
        sum_dy_xhat += dp[i] * ((zp[i] - mu) * istd);
      }
    }
    dbeta[c] = static_cast<T>(sum_dy);
    dgamma[c] = static_cast<T>(sum_dy_xhat);
    const double k = gamma[c] * istd;
    const double mean_dy = sum_dy / M, mean_dy_xhat = sum_dy_xhat / M;
    for (std::size_t n = 0; n < s.n; ++n) {
      const T* zp = z.sample(n) + c * P;
      const T* dp = dy.sample(n) + c * P;
      T* out = dz.sample(n) + c * P;
      for (std::size_t i = 0; i < P; ++i) {
        const double xhat = (zp[i] - mu) * istd;
        out[i] = static_cast<T>(k * (dp[i] - mean_dy - xhat * mean_dy_xhat));
      }
    }
  }
}

template <typename T>
void relu_inplace(std::span<T> v) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) v[i] = v[i] > T(0) ? v[i] : T(0);
}

template <typename T>
void relu_backward(std::span<const T> out, std::span<const T> dy, std::span<T> dx) {
  if (out.size() != dy.size() || dx.size() != dy.size()) throw ShapeError("relu_backward: size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(dy.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) dx[i] = out[i] > T(0) ? dy[i] : T(0);
}

#define WIFIPOSE_INSTANTIATE(T)                                                                                       \
  template void conv2d_forward<T>(const nn::Tensor4<T>&, std::span<const T>, std::span<const T>, const ConvGeometry&, \
                                  nn::Tensor4<T>&);                                                                   \
  template void conv2d_backward<T>(const nn::Tensor4<T>&, std::span<const T>, const ConvGeometry&,                     \
                                   const nn::Tensor4<T>&, nn::Tensor4<T>*, std::span<T>, std::span<T>);               \
  template void batchnorm_forward_train<T>(const nn::Tensor4<T>&, std::span<const T>, std::span<const T>, T,           \
                                           nn::Tensor4<T>&, std::span<T>, std::span<T>);                              \
  template void batchnorm_forward_eval<T>(const nn::Tensor4<T>&, std::span<const T>, std::span<const T>,               \
                                          std::span<const T>, std::span<const T>, T, nn::Tensor4<T>&);                \
  template void batchnorm_backward<T>(const nn::Tensor4<T>&, std::span<const T>, std::span<const T>,                   \
                                      std::span<const T>, const nn::Tensor4<T>&, nn::Tensor4<T>&, std::span<T>,       \
                                      std::span<T>);                                                                  \
  template void relu_inplace<T>(std::span<T>);                                                                        \
  template void relu_backward<T>(std::span<const T>, std::span<const T>, std::span<T>);

WIFIPOSE_INSTANTIATE(float)
WIFIPOSE_INSTANTIATE(double)

#undef WIFIPOSE_INSTANTIATE

}  // namespace wifipose::kernels
