#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "wifipose/gradcheck.hpp"
#include "wifipose/synth.hpp"
#include "wifipose/train.hpp"

namespace testsupport {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("wifipose_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<unsigned char> read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<double> naive_conv(const std::vector<double>& x, std::size_t c, std::size_t h, std::size_t w,
                               const std::vector<double>& weight, std::size_t cout, std::size_t k,
                               std::size_t stride, std::size_t pad, std::size_t& oh, std::size_t& ow) {
  oh = (h + 2 * pad - k) / stride + 1;
  ow = (w + 2 * pad - k) / stride + 1;
  std::vector<double> y(cout * oh * ow, 0.0);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < c; ++ci)
          for (std::size_t ki = 0; ki < k; ++ki)
            for (std::size_t kj = 0; kj < k; ++kj) {
              const long r = static_cast<long>(i * stride + ki) - static_cast<long>(pad);
              const long q = static_cast<long>(j * stride + kj) - static_cast<long>(pad);
              if (r < 0 || q < 0 || r >= static_cast<long>(h) || q >= static_cast<long>(w)) continue;
              acc += x[(ci * h + static_cast<std::size_t>(r)) * w + static_cast<std::size_t>(q)] *
                     weight[((o * c + ci) * k + ki) * k + kj];
            }
        y[(o * oh + i) * ow + j] = acc;
      }
  return y;
}

namespace {

struct Map {
  std::vector<double> v;
  std::size_t c, h, w;
};

const std::vector<double>& tensor(const wifipose::nnet::WpnetParams<double>& p, const std::string& name) {
  for (const auto& t : p.tensors) {
    if (t.name == name) return t.values;
  }
  throw std::runtime_error("missing tensor " + name);
}

bool has_tensor(const wifipose::nnet::WpnetParams<double>& p, const std::string& name) {
  return std::any_of(p.tensors.begin(), p.tensors.end(), [&](const auto& t) { return t.name == name; });
}

Map conv_bn(const wifipose::nnet::WpnetParams<double>& p, const Map& in, const std::string& conv,
            const std::string& bn, std::size_t k, std::size_t stride) {
  const auto& wt = tensor(p, conv + ".weight");
  const std::size_t cout = wt.size() / (in.c * k * k);
  Map out;
  out.c = cout;
  out.v = naive_conv(in.v, in.c, in.h, in.w, wt, cout, k, stride, k / 2, out.h, out.w);
  const auto& g = tensor(p, bn + ".gamma");
  const auto& b = tensor(p, bn + ".beta");
  const auto& rm = tensor(p, bn + ".running_mean");
  const auto& rv = tensor(p, bn + ".running_var");
  const std::size_t plane = out.h * out.w;
  for (std::size_t c = 0; c < cout; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      double& v = out.v[c * plane + i];
      v = g[c] * (v - rm[c]) / std::sqrt(rv[c] + 1e-5) + b[c];
    }
  return out;
}

void relu(Map& m) {
  for (auto& v : m.v) v = std::max(v, 0.0);
}

}  // namespace

std::vector<double> naive_wpnet_forward(const wifipose::nnet::WpnetParams<double>& p, const std::vector<double>& x) {
  const auto& cfg = p.config;
  Map a{x, 1, cfg.input_size, cfg.input_size};
  a = conv_bn(p, a, "stem.conv", "stem.bn", 3, 1);
  relu(a);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < cfg.block_counts[s]; ++b) {
      const std::string pre = "stage" + std::to_string(s + 2) + ".block" + std::to_string(b);
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      Map r = conv_bn(p, a, pre + ".conv1", pre + ".bn1", 3, stride);
      relu(r);
      r = conv_bn(p, r, pre + ".conv2", pre + ".bn2", 3, 1);
      const Map shortcut = has_tensor(p, pre + ".proj.conv.weight")
                               ? conv_bn(p, a, pre + ".proj.conv", pre + ".proj.bn", 1, stride)
                               : a;
      for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += shortcut.v[i];
      relu(r);
      a = std::move(r);
    }
  }
  std::size_t oh = 0, ow = 0;
  auto head = naive_conv(a.v, a.c, a.h, a.w, tensor(p, "head.weight"), 2, 1, 1, 0, oh, ow);
  const auto& bias = tensor(p, "head.bias");
  const std::size_t L = cfg.n_landmarks;
  std::vector<double> out(2 * L, 0.0);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const double v = head[(c * oh + i) * ow + j] + bias[c];
        if (cfg.pool_last_axis) {
          out[c * L + i] += v / static_cast<double>(ow);
        } else {
          out[c * L + j] += v / static_cast<double>(oh);
        }
      }
  return out;
}

BruteForcePck brute_force_pck(const std::vector<wifipose::pose::PoseLandmarks>& preds,
                              const std::vector<wifipose::pose::PoseLandmarks>& gts,
                              const std::vector<double>& thresholds, double torso_epsilon) {
  BruteForcePck r;
  r.per_joint.assign(17, std::vector<double>(thresholds.size(), 0.0));
  for (std::size_t f = 0; f < gts.size(); ++f) {
    const double tx = gts[f][6].x - gts[f][11].x, ty = gts[f][6].y - gts[f][11].y;
    const double torso = std::sqrt(tx * tx + ty * ty);
    if (torso < torso_epsilon || torso == 0.0) continue;
    ++r.n_evaluated;
    for (std::size_t j = 0; j < 17; ++j) {
      const double dx = preds[f][j].x - gts[f][j].x, dy = preds[f][j].y - gts[f][j].y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      for (std::size_t k = 0; k < thresholds.size(); ++k) {
        if (dist <= thresholds[k] / 100.0 * torso) r.per_joint[j][k] += 1.0;
      }
    }
  }
  r.average.assign(thresholds.size(), 0.0);
  for (auto& row : r.per_joint)
    for (std::size_t k = 0; k < row.size(); ++k) {
      row[k] = r.n_evaluated ? 100.0 * row[k] / static_cast<double>(r.n_evaluated) : 0.0;
      r.average[k] += row[k] / 17.0;
    }
  return r;
}

ParsedTable parse_table(const std::string& text) {
  ParsedTable t;
  std::istringstream lines(text);
  std::string line;
  bool header = true;
  while (std::getline(lines, line)) {
    std::istringstream tok(line);
    std::string name;
    tok >> name;
    if (header) {
      std::string col;
      while (tok >> col) {
        if (col.rfind("PCK@", 0) != 0) throw std::runtime_error("bad header cell " + col);
        t.thresholds.push_back(std::stod(col.substr(4)));
      }
      header = false;
      continue;
    }
    std::vector<double> row;
    std::string cell;
    while (tok >> cell) row.push_back(std::stod(cell));
    if (row.size() != t.thresholds.size()) throw std::runtime_error("ragged row: " + line);
    t.names.push_back(name);
    t.rows.push_back(row);
  }
  return t;
}

namespace {

std::vector<std::size_t> ids_upto(std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

}  // namespace

wifipose::dataio::Dataset synthetic_dataset(std::size_t n_frames, std::uint64_t seed, double noise_sigma) {
  using namespace wifipose;
  synth::SceneConfig sc;
  sc.seed = seed;
  sc.n_frames = n_frames;
  sc.noise_sigma = noise_sigma;
  const auto scene = synth::make_scene(sc);
  dataio::Dataset ds;
  ds.manifest.n_samples = n_frames;
  ds.manifest.split_seed = seed;
  ds.samples.resize(n_frames);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < n_frames; ++k) {
    ds.samples[k] = {synth::render_csi(scene, k), dataio::quantize_f32(scene.landmarks_per_frame[k]), k};
  }
  ds.splits = n_frames >= 3 ? dataio::split(n_frames, 0.2, 0.2, seed) : dataio::Splits{ids_upto(n_frames), {}, {}};
  return ds;
}

namespace {

wifipose::nn::Tensor4<double> tiny_inputs(std::size_t n, std::uint64_t seed) {
  const auto ds = synthetic_dataset(n, seed);
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  const auto set = wifipose::train::prepare(ds, ids, wifipose::nnet::WpnetConfig::tiny());
  wifipose::nn::Tensor4<double> out(set.inputs.shape);
  std::copy(set.inputs.data.begin(), set.inputs.data.end(), out.data.begin());
  return out;
}

}  // namespace

GradientComparison tiny_gradient_check(std::uint64_t seed, std::size_t n_coords) {
  using namespace wifipose;
  const auto cfg = nnet::WpnetConfig::tiny();
  auto params = nnet::build_wpnet<double>(cfg, seed);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Non-trivial BN affine parameters and head bias so every gradient path is exercised.
  for (auto& t : params.tensors) {
    if (t.name.ends_with(".gamma")) for (auto& v : t.values) v = 1.0 + 0.3 * normal(gen);
    if (t.name.ends_with(".beta") || t.name == "head.bias") for (auto& v : t.values) v = 0.3 * normal(gen);
  }
  const auto x = tiny_inputs(4, seed);
  nn::Tensor4<double> target({4, 2, cfg.n_landmarks, 1});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : target.data) v = unit(gen);

  nnet::ForwardCache<double> cache;
  const auto out = nnet::forward_batch(params, x, nnet::Mode::kTrain, &cache);
  nn::Tensor4<double> d_out(out.shape);
  const double count = static_cast<double>(out.data.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) d_out.data[i] = 2.0 * (out.data[i] - target.data[i]) / count;
  const auto analytic_all = nnet::flatten_gradients(params, nnet::backward_batch(params, cache, d_out));

  const auto theta = nnet::flatten_trainable(params);
  std::vector<std::size_t> coords(n_coords);
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  for (auto& c : coords) c = pick(gen);

  auto probe = params;
  auto loss_at = [&](std::span<const double> t) {
    nnet::assign_trainable(probe, t);
    const auto y = nnet::forward_batch(probe, x, nnet::Mode::kTrain);
    return train::mse_loss(y.values(), target.values());
  };
  GradientComparison r;
  r.numeric = nnet::numeric_gradient(loss_at, theta, 1e-6, coords);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double a = analytic_all[coords[i]], n = r.numeric[i];
    r.analytic.push_back(a);
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-7});
    r.max_relative_error = std::max(r.max_relative_error, rel);
  }
  return r;
}

OverfitResult overfit_one_batch(std::size_t steps, double lr, std::uint64_t seed) {
  using namespace wifipose;
  const auto cfg = nnet::WpnetConfig::tiny();
  const auto ds = synthetic_dataset(32, seed);
  std::vector<std::size_t> ids(32);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto set = train::prepare(ds, ids, cfg);
  auto params = nnet::build_wpnet<float>(cfg, seed);
  auto velocity = train::zero_velocity(params);
  OverfitResult r;
  for (std::size_t s = 0; s < steps; ++s) {
    const double loss = train::train_step(params, velocity, set.inputs, set.targets, lr, 0.9);
    if (s == 0) r.initial_loss = loss;
  }
  const auto y = nnet::forward_batch(params, set.inputs, nnet::Mode::kTrain);
  r.final_loss = train::mse_loss(y.values(), set.targets.values());
  return r;
}

wifipose::pose::PoseLandmarks random_pose(std::mt19937_64& gen, double width, double height) {
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height);
  wifipose::pose::PoseLandmarks p;
  for (auto& pt : p.points) pt = {ux(gen), uy(gen)};
  return p;
}

}  // namespace testsupport
