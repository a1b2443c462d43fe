#include "wifipose/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "wifipose/errors.hpp"

namespace wifipose::nnet {
namespace {

using kernels::ConvGeometry;

struct ConvBn {
  std::size_t weight = 0, gamma = 0, beta = 0, running_mean = 0, running_var = 0;
  ConvGeometry geom;
};

struct ResBlock {
  ConvBn c1, c2;
  std::optional<ConvBn> proj;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  bool trainable;
  enum class Init { kHe, kOne, kZero } init;
  std::size_t fan_in;
};

struct Plan {
  ConvBn stem;
  std::vector<ResBlock> blocks;
  std::vector<std::size_t> stage_of_block;  // 0..3
  std::size_t head_weight = 0, head_bias = 0;
  ConvGeometry head_geom;
  std::vector<TensorSpec> specs;
};

std::size_t ceil_half(std::size_t v) { return (v + 1) / 2; }

class PlanBuilder {
 public:
  Plan plan;

  std::size_t add(std::string name, std::vector<std::size_t> shape, bool trainable, TensorSpec::Init init,
                  std::size_t fan_in = 0) {
    plan.specs.push_back({std::move(name), std::move(shape), trainable, init, fan_in});
    return plan.specs.size() - 1;
  }

  ConvBn conv_bn(const std::string& conv_name, const std::string& bn_name, std::size_t cin, std::size_t cout,
                 std::size_t kernel, std::size_t stride) {
    ConvBn u;
    u.geom = {cin, cout, kernel, stride, kernel / 2};
    u.weight = add(conv_name + ".weight", {cout, cin, kernel, kernel}, true, TensorSpec::Init::kHe,
                   cin * kernel * kernel);
    u.gamma = add(bn_name + ".gamma", {cout}, true, TensorSpec::Init::kOne);
    u.beta = add(bn_name + ".beta", {cout}, true, TensorSpec::Init::kZero);
    u.running_mean = add(bn_name + ".running_mean", {cout}, false, TensorSpec::Init::kZero);
    u.running_var = add(bn_name + ".running_var", {cout}, false, TensorSpec::Init::kOne);
    return u;
  }
};

Plan make_plan(const WpnetConfig& cfg) {
  cfg.validate();
  const auto ch = cfg.stage_channels();
  PlanBuilder b;
  b.plan.stem = b.conv_bn("stem.conv", "stem.bn", 1, ch[0], 3, 1);
  std::size_t cin = ch[0];
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < cfg.block_counts[s]; ++i) {
      const std::string prefix = "stage" + std::to_string(s + 2) + ".block" + std::to_string(i);
      const std::size_t stride = (s > 0 && i == 0) ? 2 : 1;
      ResBlock blk;
      blk.c1 = b.conv_bn(prefix + ".conv1", prefix + ".bn1", cin, ch[s], 3, stride);
      blk.c2 = b.conv_bn(prefix + ".conv2", prefix + ".bn2", ch[s], ch[s], 3, 1);
      if (stride != 1 || cin != ch[s]) {
        blk.proj = b.conv_bn(prefix + ".proj.conv", prefix + ".proj.bn", cin, ch[s], 1, stride);
        blk.proj->geom.pad = 0;
      }
      b.plan.blocks.push_back(blk);
      b.plan.stage_of_block.push_back(s);
      cin = ch[s];
    }
  }
  b.plan.head_geom = {cin, 2, 1, 1, 0};
  b.plan.head_weight = b.add("head.weight", {2, cin, 1, 1}, true, TensorSpec::Init::kHe, cin);
  b.plan.head_bias = b.add("head.bias", {2}, true, TensorSpec::Init::kZero);
  return std::move(b.plan);
}

template <typename T>
void check_layout(const WpnetParams<T>& p, const Plan& plan) {
  if (p.tensors.size() != plan.specs.size()) {
    throw ConfigError("parameter set has " + std::to_string(p.tensors.size()) + " tensors, config implies " +
                      std::to_string(plan.specs.size()));
  }
  for (std::size_t i = 0; i < plan.specs.size(); ++i) {
    const auto& spec = plan.specs[i];
    const auto& t = p.tensors[i];
    std::size_t n = 1;
    for (auto d : spec.shape) n *= d;
    if (t.name != spec.name || t.shape != spec.shape || t.values.size() != n) {
      throw ConfigError("tensor " + std::to_string(i) + " ('" + t.name + "') does not match config layout ('" +
                        spec.name + "')");
    }
  }
}

template <typename T>
class Runner {
 public:
  Runner(const WpnetParams<T>& p, Mode mode) : p_(p), mode_(mode) {}

  std::span<const T> v(std::size_t idx) const { return p_.tensors[idx].values; }

  void conv_bn(const ConvBn& u, const nn::Tensor4<T>& x, nn::Tensor4<T>& y, ConvBnCache<T>* c) {
    nn::Tensor4<T>& z = c != nullptr ? c->z : z_scratch_;
    kernels::conv2d_forward<T>(x, v(u.weight), {}, u.geom, z);
    const T eps = static_cast<T>(kBatchNormEpsilon);
    if (mode_ == Mode::kTrain) {
      std::vector<T> local_mean, local_istd;
      auto& mean = c != nullptr ? c->mean : local_mean;
      auto& istd = c != nullptr ? c->inv_std : local_istd;
      mean.assign(u.geom.cout, T(0));
      istd.assign(u.geom.cout, T(0));
      kernels::batchnorm_forward_train<T>(z, v(u.gamma), v(u.beta), eps, y, mean, istd);
    } else {
      kernels::batchnorm_forward_eval<T>(z, v(u.gamma), v(u.beta), v(u.running_mean), v(u.running_var), eps, y);
    }
  }

  void block(const ResBlock& b, const nn::Tensor4<T>& in, nn::Tensor4<T>& out, BlockCache<T>* c) {
    nn::Tensor4<T> local_a1;
    nn::Tensor4<T>& a1 = c != nullptr ? c->a1 : local_a1;
    conv_bn(b.c1, in, a1, c != nullptr ? &c->c1 : nullptr);
    kernels::relu_inplace<T>(a1.values());
    conv_bn(b.c2, a1, out, c != nullptr ? &c->c2 : nullptr);
    if (b.proj) {
      nn::Tensor4<T> sc;
      conv_bn(*b.proj, in, sc, c != nullptr ? &c->proj : nullptr);
      add_inplace(out, sc);
    } else {
      add_inplace(out, in);
    }
    kernels::relu_inplace<T>(out.values());
  }

  static void add_inplace(nn::Tensor4<T>& a, const nn::Tensor4<T>& b) {
    if (a.shape != b.shape) throw ShapeError("residual add: " + a.shape.str() + " vs " + b.shape.str());
    const auto n = static_cast<std::ptrdiff_t>(a.data.size());
    T* pa = a.data.data();
    const T* pb = b.data.data();
#pragma omp parallel for simd schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) pa[i] += pb[i];
  }

 private:
  const WpnetParams<T>& p_;
  Mode mode_;
  nn::Tensor4<T> z_scratch_;
};

template <typename T>
void bn_backward(const WpnetParams<T>& p, const ConvBn& u, const ConvBnCache<T>& c, const nn::Tensor4<T>& dy,
                 nn::Tensor4<T>& dz, Gradients<T>& g) {
  kernels::batchnorm_backward<T>(c.z, p.tensors[u.gamma].values, c.mean, c.inv_std, dy, dz, g[u.gamma], g[u.beta]);
}

}  // namespace

void WpnetConfig::validate() const {
  if (base_channels == 0) throw ConfigError("base_channels must be positive");
  for (auto c : block_counts) {
    if (c == 0) throw ConfigError("every stage needs at least one block");
  }
  if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) throw ConfigError("width_multiplier must be in (0, 1]");
  if (n_landmarks == 0) throw ConfigError("n_landmarks must be positive");
  if (input_size < 2) throw ConfigError("input_size must be at least 2");
  const std::size_t reduced = ceil_half(ceil_half(ceil_half(input_size)));
  if (reduced != n_landmarks) {
    throw ConfigError("input_size " + std::to_string(input_size) + " reduces to " + std::to_string(reduced) +
                      " after three stride-2 stages, but n_landmarks is " + std::to_string(n_landmarks));
  }
}

std::array<std::size_t, 4> WpnetConfig::stage_channels() const {
  std::array<std::size_t, 4> ch{};
  for (std::size_t s = 0; s < 4; ++s) {
    const double scaled = static_cast<double>(base_channels << s) * width_multiplier;
    ch[s] = std::max<std::size_t>(4, static_cast<std::size_t>(std::lround(scaled)));
  }
  return ch;
}

WpnetConfig WpnetConfig::tiny() {
  WpnetConfig c;
  c.width_multiplier = 1.0 / 16.0;
  c.input_size = 24;
  c.n_landmarks = 3;
  return c;
}

template <typename T>
std::size_t WpnetParams<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name == name) return i;
  }
  throw std::out_of_range("no tensor named '" + name + "'");
}

template <typename T>
std::size_t WpnetParams<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    if (t.trainable) n += t.values.size();
  }
  return n;
}

template <typename To, typename From>
WpnetParams<To> cast_params(const WpnetParams<From>& p) {
  WpnetParams<To> out;
  out.config = p.config;
  out.seed = p.seed;
  out.tensors.reserve(p.tensors.size());
  for (const auto& t : p.tensors) {
    NamedTensor<To> c{t.name, t.shape, {}, t.trainable};
    c.values.assign(t.values.begin(), t.values.end());
    out.tensors.push_back(std::move(c));
  }
  return out;
}

template <typename T>
WpnetParams<T> build_wpnet(const WpnetConfig& config, std::uint64_t seed) {
  const Plan plan = make_plan(config);
  WpnetParams<T> p;
  p.config = config;
  p.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& spec : plan.specs) {
    NamedTensor<T> t{spec.name, spec.shape, {}, spec.trainable};
    std::size_t n = 1;
    for (auto d : spec.shape) n *= d;
    t.values.resize(n);
    switch (spec.init) {
      case TensorSpec::Init::kHe: {
        const double stddev = std::sqrt(2.0 / static_cast<double>(spec.fan_in));
        for (auto& v : t.values) v = static_cast<T>(stddev * normal(rng));
        break;
      }
      case TensorSpec::Init::kOne:
        std::fill(t.values.begin(), t.values.end(), T(1));
        break;
      case TensorSpec::Init::kZero:
        std::fill(t.values.begin(), t.values.end(), T(0));
        break;
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

template <typename T>
static std::size_t count_convs(const WpnetParams<T>& p) {
  return static_cast<std::size_t>(std::count_if(p.tensors.begin(), p.tensors.end(), [](const NamedTensor<T>& t) {
    return t.shape.size() == 4 && t.name.ends_with(".weight");
  }));
}

std::size_t conv_tensor_count(const WpnetParams<float>& p) { return count_convs(p); }
std::size_t conv_tensor_count(const WpnetParams<double>& p) { return count_convs(p); }

template <typename T>
nn::Tensor4<T> forward_batch(const WpnetParams<T>& params, const nn::Tensor4<T>& x, Mode mode,
                             ForwardCache<T>* cache, std::vector<StageShape>* trace) {
  const Plan plan = make_plan(params.config);
  check_layout(params, plan);
  const auto& cfg = params.config;
  if (x.shape.c != 1 || x.shape.h != cfg.input_size || x.shape.w != cfg.input_size || x.shape.n == 0) {
    throw ShapeError("input stage: expected (N,1," + std::to_string(cfg.input_size) + "," +
                     std::to_string(cfg.input_size) + "), got " + x.shape.str());
  }
  if (cache != nullptr && mode != Mode::kTrain) throw ConfigError("forward cache is only filled in training mode");

  Runner<T> run(params, mode);
  auto record = [&](const std::string& name, const nn::Shape4& s) {
    if (trace != nullptr) trace->push_back({name, s.c, s.h, s.w});
  };

  if (cache != nullptr) {
    cache->input = x;
    cache->blocks.assign(plan.blocks.size(), {});
  }

  nn::Tensor4<T> local_stem;
  nn::Tensor4<T>& stem_out = cache != nullptr ? cache->stem_out : local_stem;
  run.conv_bn(plan.stem, x, stem_out, cache != nullptr ? &cache->stem : nullptr);
  kernels::relu_inplace<T>(stem_out.values());
  record("block1", stem_out.shape);

  nn::Tensor4<T> cur_local, next_local;
  const nn::Tensor4<T>* cur = &stem_out;
  for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
    BlockCache<T>* bc = cache != nullptr ? &cache->blocks[i] : nullptr;
    nn::Tensor4<T>& out = bc != nullptr ? bc->out : next_local;
    run.block(plan.blocks[i], *cur, out, bc);
    if (bc == nullptr) {
      std::swap(cur_local, next_local);
      cur = &cur_local;
    } else {
      cur = &bc->out;
    }
    const bool last_in_stage = i + 1 == plan.blocks.size() || plan.stage_of_block[i + 1] != plan.stage_of_block[i];
    if (last_in_stage) record("block" + std::to_string(plan.stage_of_block[i] + 2), cur->shape);
  }

  nn::Tensor4<T> local_head;
  nn::Tensor4<T>& head = cache != nullptr ? cache->head : local_head;
  kernels::conv2d_forward<T>(*cur, params.tensors[plan.head_weight].values, params.tensors[plan.head_bias].values,
                             plan.head_geom, head);
  record("bottleneck", head.shape);

  const std::size_t N = x.shape.n, L = cfg.n_landmarks, H = head.shape.h, W = head.shape.w;
  if (H != L || W != L) {
    throw ShapeError("bottleneck stage: expected (2," + std::to_string(L) + "," + std::to_string(L) + "), got " +
                     head.shape.str());
  }
  nn::Tensor4<T> out({N, 2, L, 1});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < L; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < L; ++j) acc += cfg.pool_last_axis ? head.at(n, c, i, j) : head.at(n, c, j, i);
        out.at(n, c, i, 0) = static_cast<T>(acc / static_cast<double>(L));
      }
    }
  }
  record("output", out.shape);
  return out;
}

template <typename T>
Gradients<T> backward_batch(const WpnetParams<T>& params, const ForwardCache<T>& cache, const nn::Tensor4<T>& d_out) {
  const Plan plan = make_plan(params.config);
  check_layout(params, plan);
  const std::size_t L = params.config.n_landmarks;
  const std::size_t N = cache.input.shape.n;
  if (d_out.shape != nn::Shape4{N, 2, L, 1}) throw ShapeError("backward: d_out shape " + d_out.shape.str());
  if (cache.blocks.size() != plan.blocks.size()) throw ShapeError("backward: cache does not match network");

  Gradients<T> g(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    if (params.tensors[i].trainable) g[i].assign(params.tensors[i].values.size(), T(0));
  }

  nn::Tensor4<T> d_head(cache.head.shape);
  const T inv_l = static_cast<T>(1.0 / static_cast<double>(L));
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < L; ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          const T d = params.config.pool_last_axis ? d_out.at(n, c, i, 0) : d_out.at(n, c, j, 0);
          d_head.at(n, c, i, j) = d * inv_l;
        }
      }
    }
  }

  const nn::Tensor4<T>& last = cache.blocks.empty() ? cache.stem_out : cache.blocks.back().out;
  nn::Tensor4<T> dh;
  kernels::conv2d_backward<T>(last, params.tensors[plan.head_weight].values, plan.head_geom, d_head, &dh,
                              g[plan.head_weight], g[plan.head_bias]);

  nn::Tensor4<T> gbuf, dz, da1, din, dsc;
  for (std::size_t bi = plan.blocks.size(); bi-- > 0;) {
    const ResBlock& b = plan.blocks[bi];
    const BlockCache<T>& c = cache.blocks[bi];
    const nn::Tensor4<T>& in = bi == 0 ? cache.stem_out : cache.blocks[bi - 1].out;

    gbuf.resize(c.out.shape);
    kernels::relu_backward<T>(c.out.values(), dh.values(), gbuf.values());

    bn_backward(params, b.c2, c.c2, gbuf, dz, g);
    kernels::conv2d_backward<T>(c.a1, params.tensors[b.c2.weight].values, b.c2.geom, dz, &da1, g[b.c2.weight], {});
    kernels::relu_backward<T>(c.a1.values(), da1.values(), da1.values());
    bn_backward(params, b.c1, c.c1, da1, dz, g);
    kernels::conv2d_backward<T>(in, params.tensors[b.c1.weight].values, b.c1.geom, dz, &din, g[b.c1.weight], {});

    if (b.proj) {
      bn_backward(params, *b.proj, c.proj, gbuf, dz, g);
      kernels::conv2d_backward<T>(in, params.tensors[b.proj->weight].values, b.proj->geom, dz, &dsc,
                                  g[b.proj->weight], {});
      Runner<T>::add_inplace(din, dsc);
    } else {
      Runner<T>::add_inplace(din, gbuf);
    }
    std::swap(dh, din);
  }

  gbuf.resize(cache.stem_out.shape);
  kernels::relu_backward<T>(cache.stem_out.values(), dh.values(), gbuf.values());
  bn_backward(params, plan.stem, cache.stem, gbuf, dz, g);
  kernels::conv2d_backward<T>(cache.input, params.tensors[plan.stem.weight].values, plan.stem.geom, dz, nullptr,
                              g[plan.stem.weight], {});
  return g;
}

template <typename T>
void update_running_stats(WpnetParams<T>& params, const ForwardCache<T>& cache, double momentum) {
  const Plan plan = make_plan(params.config);
  check_layout(params, plan);
  auto fold = [&](const ConvBn& u, const ConvBnCache<T>& c) {
    const double m = static_cast<double>(c.z.shape.n * c.z.shape.plane());
    const double unbias = m > 1.0 ? m / (m - 1.0) : 1.0;
    auto& rm = params.tensors[u.running_mean].values;
    auto& rv = params.tensors[u.running_var].values;
    for (std::size_t ch = 0; ch < rm.size(); ++ch) {
      const double istd = c.inv_std[ch];
      const double var = std::max(0.0, 1.0 / (istd * istd) - kBatchNormEpsilon) * unbias;
      rm[ch] = static_cast<T>((1.0 - momentum) * rm[ch] + momentum * c.mean[ch]);
      rv[ch] = static_cast<T>((1.0 - momentum) * rv[ch] + momentum * var);
    }
  };
  fold(plan.stem, cache.stem);
  for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
    fold(plan.blocks[i].c1, cache.blocks[i].c1);
    fold(plan.blocks[i].c2, cache.blocks[i].c2);
    if (plan.blocks[i].proj) fold(*plan.blocks[i].proj, cache.blocks[i].proj);
  }
}

template <typename T>
LandmarkPrediction forward(const WpnetParams<T>& params, const preprocess::InputTensor& x) {
  const std::size_t S = x.size;
  if (x.data.size() != S * S) throw ShapeError("input stage: tensor data does not match its size");
  nn::Tensor4<T> in({1, 1, S, S});
  std::transform(x.data.begin(), x.data.end(), in.data.begin(), [](double v) { return static_cast<T>(v); });
  const auto out = forward_batch(params, in, Mode::kEval);
  LandmarkPrediction pred;
  pred.n_landmarks = params.config.n_landmarks;
  pred.coords.assign(out.data.begin(), out.data.end());
  return pred;
}

bool pointwise_equiv_check(std::span<const double> kernel, std::size_t out_channels,
                           std::span<const double> feature_map, std::size_t channels, std::size_t height,
                           std::size_t width) {
  if (kernel.size() != out_channels * channels || feature_map.size() != channels * height * width) {
    throw ShapeError("pointwise_equiv_check: incompatible kernel and feature map");
  }
  nn::Tensor4<double> x({1, channels, height, width});
  std::copy(feature_map.begin(), feature_map.end(), x.data.begin());
  nn::Tensor4<double> y;
  kernels::conv2d_forward<double>(x, kernel, {}, {channels, out_channels, 1, 1, 0}, y);

  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t o = 0; o < out_channels; ++o) {
        double site = 0.0;
        for (std::size_t i = 0; i < channels; ++i) site += kernel[o * channels + i] * x.at(0, i, r, c);
        if (std::abs(y.at(0, o, r, c) - site) > 1e-6 * std::max(1.0, std::abs(site))) return false;
      }
    }
  }
  return true;
}

#define WIFIPOSE_INSTANTIATE(T)                                                                                  \
  template struct WpnetParams<T>;                                                                                \
  template WpnetParams<T> build_wpnet<T>(const WpnetConfig&, std::uint64_t);                                     \
  template nn::Tensor4<T> forward_batch<T>(const WpnetParams<T>&, const nn::Tensor4<T>&, Mode, ForwardCache<T>*, \
                                           std::vector<StageShape>*);                                            \
  template Gradients<T> backward_batch<T>(const WpnetParams<T>&, const ForwardCache<T>&, const nn::Tensor4<T>&); \
  template void update_running_stats<T>(WpnetParams<T>&, const ForwardCache<T>&, double);                        \
  template LandmarkPrediction forward<T>(const WpnetParams<T>&, const preprocess::InputTensor&);

WIFIPOSE_INSTANTIATE(float)
WIFIPOSE_INSTANTIATE(double)
#undef WIFIPOSE_INSTANTIATE

template WpnetParams<float> cast_params<float, double>(const WpnetParams<double>&);
template WpnetParams<double> cast_params<double, float>(const WpnetParams<float>&);
template WpnetParams<float> cast_params<float, float>(const WpnetParams<float>&);
template WpnetParams<double> cast_params<double, double>(const WpnetParams<double>&);

}  // namespace wifipose::nnet
