// Acceptance gates, one PASS/FAIL line each. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "support.hpp"

#include "wifipose/dataio.hpp"
#include "wifipose/eval.hpp"
#include "wifipose/nnet.hpp"
#include "wifipose/preprocess.hpp"
#include "wifipose/train.hpp"

using namespace wifipose;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Verdict shape_conformance() {
  const auto p = nnet::build_wpnet<float>(nnet::WpnetConfig{}, 0);
  nn::Tensor4<float> x({1, 1, 136, 136}, 0.0f);
  std::mt19937_64 gen(1);
  std::normal_distribution<float> d;
  for (auto& v : x.data) v = d(gen);
  std::vector<nnet::StageShape> trace;
  const auto y = nnet::forward_batch<float>(p, x, nnet::Mode::kEval, nullptr, &trace);
  const std::vector<nnet::StageShape> want{
      {"block1", 64, 136, 136}, {"block2", 64, 136, 136}, {"block3", 128, 68, 68}, {"block4", 256, 34, 34},
      {"block5", 512, 17, 17},  {"bottleneck", 2, 17, 17}, {"output", 2, 17, 1},
  };
  std::string got;
  for (const auto& s : trace) {
    got += s.name + "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ") ";
  }
  return {trace == want && y.shape == nn::Shape4{1, 2, 17, 1}, got + "-> (2,17)"};
}

Verdict gradient_fidelity() {
  const auto r = testsupport::tiny_gradient_check(2024, 200);
  return {r.analytic.size() >= 200 && r.max_relative_error < 1e-3,
          std::to_string(r.analytic.size()) + " coordinates, max relative error " + fmt("%.3g", r.max_relative_error)};
}

Verdict metric_oracle() {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> noise(0.0, 40.0);
  auto jitter = [&](std::vector<pose::PoseLandmarks> v, double s) {
    std::normal_distribution<double> d(0.0, s);
    for (auto& p : v)
      for (auto& pt : p.points) pt = {pt.x + d(gen), pt.y + d(gen)};
    return v;
  };

  std::vector<pose::PoseLandmarks> gts;
  for (int i = 0; i < 200; ++i) gts.push_back(testsupport::random_pose(gen));
  const auto preds = jitter(gts, 40.0);
  const eval::PckConfig cfg;
  const auto r = eval::pck(preds, gts, cfg);
  const auto want = testsupport::brute_force_pck(preds, gts, cfg.thresholds, cfg.torso_epsilon);
  double worst = 0.0;
  for (std::size_t j = 0; j < 17; ++j)
    for (std::size_t k = 0; k < cfg.thresholds.size(); ++k)
      worst = std::max(worst, std::abs(r.per_joint[j][k] - want.per_joint[j][k]));
  for (std::size_t k = 0; k < cfg.thresholds.size(); ++k) worst = std::max(worst, std::abs(r.average[k] - want.average[k]));

  std::size_t failures = 0;
  std::uniform_real_distribution<double> shift(-1000.0, 1000.0), scale(0.05, 20.0), spread(1.0, 150.0);
  std::uniform_int_distribution<int> frames(1, 6);
  for (int c = 0; c < 1000; ++c) {
    std::vector<pose::PoseLandmarks> g;
    for (int i = frames(gen); i > 0; --i) g.push_back(testsupport::random_pose(gen));
    const auto p = jitter(g, spread(gen));
    const auto base = eval::pck(p, g, cfg);
    for (const auto& row : base.per_joint)
      for (std::size_t k = 1; k < row.size(); ++k)
        if (row[k] < row[k - 1]) ++failures;
    const double dx = shift(gen), dy = shift(gen), s = scale(gen);
    auto move = [&](std::vector<pose::PoseLandmarks> v, bool scaled) {
      for (auto& q : v)
        for (auto& pt : q.points) pt = scaled ? pose::Point{s * pt.x, s * pt.y} : pose::Point{pt.x + dx, pt.y + dy};
      return v;
    };
    for (bool scaled : {false, true}) {
      const auto moved = eval::pck(move(p, scaled), move(g, scaled), cfg);
      for (std::size_t j = 0; j < 17; ++j)
        for (std::size_t k = 0; k < cfg.thresholds.size(); ++k)
          if (std::abs(moved.per_joint[j][k] - base.per_joint[j][k]) > 1e-9) ++failures;
    }
  }
  return {worst <= 1e-9 && failures == 0,
          "oracle max |diff| " + fmt("%.3g", worst) + " on 200 frames, " + std::to_string(failures) +
              " property violations in 1000 cases"};
}

Verdict recipe_fidelity() {
  const train::TrainConfig cfg;
  const std::vector<std::pair<std::size_t, double>> want{{0, 0.001},      {9, 0.001},      {10, 0.0005},
                                                         {20, 0.00025},  {30, 0.000125}, {40, 6.25e-5},
                                                         {49, 6.25e-5}};
  bool ok = true;
  for (const auto& [e, lr] : want) ok = ok && train::lr_at(e, cfg) == lr;
  const auto s = dataio::split(13377, 0.2, 0.2, 0);
  ok = ok && s.train.size() == 8025 && s.val.size() == 2676 && s.test.size() == 2676;
  return {ok, "lr 0.001/0.0005/0.00025/0.000125/6.25e-05, split " + std::to_string(s.train.size()) + "/" +
                  std::to_string(s.val.size()) + "/" + std::to_string(s.test.size())};
}

constexpr double kOverfitLearningRate = 0.05;

Verdict overfit_sanity() {
  const auto r = testsupport::overfit_one_batch(500, kOverfitLearningRate, 5);
  const double ratio = r.final_loss / r.initial_loss;
  return {ratio < 1e-3, "MSE " + fmt("%.4g", r.initial_loss) + " -> " + fmt("%.4g", r.final_loss) + " (ratio " +
                            fmt("%.3g", ratio) + ")"};
}

constexpr double kEndToEndLearningRate = 0.01;
constexpr std::size_t kEndToEndBatchSize = 8;

Verdict end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = testsupport::synthetic_dataset(1500, 0, 0.01);
  nnet::WpnetConfig net;
  net.width_multiplier = 0.25;
  train::TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr0 = kEndToEndLearningRate;
  cfg.batch_size = kEndToEndBatchSize;
  const auto result = train::train(ds, ds.splits, net, cfg, [](const train::EpochRecord& r) {
    std::printf("  epoch %2zu  train %.5f  val %.5f  lr %.3g\n", r.epoch, r.train_loss, r.val_loss, r.lr);
    std::fflush(stdout);
  });

  const auto test = train::prepare(ds, ds.splits.test, net);
  const auto out = train::predict(result.best_params, test.inputs, cfg.batch_size);
  std::vector<pose::PoseLandmarks> preds, gts, mean_pose;
  pose::PoseLandmarks mean{};
  for (std::size_t id : ds.splits.train)
    for (std::size_t j = 0; j < 17; ++j) {
      mean[j].x += ds.samples[id].annotation[j].x / static_cast<double>(ds.splits.train.size());
      mean[j].y += ds.samples[id].annotation[j].y / static_cast<double>(ds.splits.train.size());
    }
  for (std::size_t k = 0; k < ds.splits.test.size(); ++k) {
    pose::PoseLandmarks p;
    for (std::size_t j = 0; j < 17; ++j) {
      p[j] = {out.at(k, 0, j, 0) * ds.manifest.frame_width, out.at(k, 1, j, 0) * ds.manifest.frame_height};
    }
    preds.push_back(p);
    gts.push_back(ds.samples[ds.splits.test[k]].annotation);
    mean_pose.push_back(mean);
  }
  const auto r = eval::pck(preds, gts);
  const auto baseline = eval::pck(mean_pose, gts);
  std::fputs(eval::report_table(r).c_str(), stdout);

  bool monotone = true;
  for (const auto& row : r.per_joint)
    for (std::size_t k = 1; k < row.size(); ++k) monotone = monotone && row[k] >= row[k - 1];
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  return {r.average[5] >= 90.0 && r.average[2] >= 60.0 && monotone,
          "PCK@20 " + fmt("%.2f", r.average[2]) + ", PCK@50 " + fmt("%.2f", r.average[5]) +
              " (mean-pose baseline " + fmt("%.2f", baseline.average[2]) + " / " + fmt("%.2f", baseline.average[5]) +
              "), best epoch " + std::to_string(result.history.best_epoch) + ", " + fmt("%.1f", minutes) + " min"};
}

Verdict interpolation_exactness() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<std::size_t> dim(2, 140);
  double affine_err = 0.0, identity_err = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t h = dim(gen), w = dim(gen), oh = dim(gen), ow = dim(gen);
    const double a = coef(gen), b = coef(gen), c = coef(gen);
    preprocess::Matrix m(h, w);
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) m(i, j) = a * i + b * j + c;
    const auto out = preprocess::bilinear_resize(m, oh, ow);
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        // Exact source coordinates as rationals, evaluated once.
        const double y = static_cast<double>(i * (h - 1)) / static_cast<double>(oh - 1);
        const double x = static_cast<double>(j * (w - 1)) / static_cast<double>(ow - 1);
        affine_err = std::max(affine_err, std::abs(out(i, j) - (a * y + b * x + c)));
      }
    preprocess::Matrix r(h, w);
    std::normal_distribution<double> d;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) r(i, j) = d(gen);
    identity_err = std::max(identity_err, (preprocess::bilinear_resize(r, h, w) - r).cwiseAbs().maxCoeff());
  }
  return {affine_err <= 1e-12 && identity_err <= 1e-15,
          "affine max error " + fmt("%.3g", affine_err) + ", identity max error " + fmt("%.3g", identity_err)};
}

Verdict persistence() {
  testsupport::TempDir dir("acceptance");
  bool ok = true;
  std::string detail;
  for (std::size_t n : {1u, 10u, 100u}) {
    const auto ds = testsupport::synthetic_dataset(n, n);
    const auto path = dir / ("ds" + std::to_string(n));
    dataio::save_dataset(ds, path);
    const auto back = dataio::load_dataset(path);
    const bool same = back.manifest == ds.manifest && back.samples == ds.samples && back.splits == ds.splits;
    const bool sizes = fs::file_size(path / dataio::kCsiFile) == n * 437760 / 10 &&
                       fs::file_size(path / dataio::kKeypointsFile) == n * 17 * 2 * 4 &&
                       dataio::csi_payload_bytes(ds.manifest, n) == n * 3 * 114 * 32 * 4;
    ok = ok && same && sizes;
    detail += "n=" + std::to_string(n) + (same && sizes ? " ok " : " MISMATCH ");
  }
  nnet::WpnetConfig net;
  net.width_multiplier = 0.25;
  const auto p = nnet::build_wpnet<float>(net, 17);
  nnet::save_checkpoint(p, dir / "ck");
  const bool ck = nnet::load_checkpoint(dir / "ck") == p;
  ok = ok && ck;
  return {ok, detail + (ck ? "checkpoint ok" : "checkpoint MISMATCH")};
}

Verdict fc_equivalence() {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> d;
  std::uniform_int_distribution<std::size_t> ch(1, 64), sp(1, 8), out(1, 17);
  std::size_t passed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // The first pair uses the network head's shape.
    const std::size_t c = trial == 0 ? 512 : ch(gen), h = trial == 0 ? 17 : sp(gen), w = trial == 0 ? 17 : sp(gen),
                      o = trial == 0 ? 2 : out(gen);
    std::vector<double> kernel(o * c), map(c * h * w);
    for (auto& v : kernel) v = d(gen);
    for (auto& v : map) v = d(gen);
    if (nnet::pointwise_equiv_check(kernel, o, map, c, h, w)) ++passed;
  }
  return {passed == 100, std::to_string(passed) + "/100 pairs"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "shape conformance", shape_conformance},
      {2, "gradient fidelity", gradient_fidelity},
      {3, "metric oracle", metric_oracle},
      {4, "recipe fidelity", recipe_fidelity},
      {5, "overfit sanity", overfit_sanity},
      {6, "end-to-end learnability", end_to_end},
      {7, "interpolation exactness", interpolation_exactness},
      {8, "persistence", persistence},
      {9, "FC equivalence", fc_equivalence},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
