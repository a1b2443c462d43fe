#include "wifipose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "wifipose/errors.hpp"
#include "wifipose/random.hpp"

namespace wifipose::synth {
namespace {

constexpr std::size_t kSinusoids = 3;

// Fundamental period in frames; sinusoid k runs at k / kPeriodFrames, so the
// activity repeats exactly and a long scene revisits every phase of it.
constexpr double kPeriodFrames = 50.0;

// Whole-body sway shared by every joint, at the 640x480 reference size;
// harmonic k gets 1/k of it.
constexpr double kSwayPxX = 100.0;
constexpr double kSwayPxY = 30.0;

// Per-joint limb motion scale in pixels at the 640x480 reference size.
constexpr std::array<double, pose::kJointCount> kJointMotionPx = {
    14.0, 14.0, 14.0, 14.0, 14.0,  // head
    16.0, 16.0,                    // shoulders
    34.0, 34.0,                    // elbows
    48.0, 48.0,                    // wrists
    14.0, 14.0,                    // hips
    22.0, 22.0,                    // knees
    26.0, 26.0,                    // ankles
};

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

void SceneConfig::validate() const {
  if (n_frames == 0) throw DomainError("scene needs at least one frame");
  if (!(noise_sigma >= 0.0)) throw DomainError("noise_sigma must be >= 0");
  if (!(frame_width > 0.0) || !(frame_height > 0.0)) throw DomainError("frame dimensions must be positive");
  if (!(carrier_hz > 0.0) || !(subcarrier_spacing_hz > 0.0)) throw DomainError("frequencies must be positive");
  const double lowest = carrier_hz - static_cast<double>(kCenterSubcarrier) * subcarrier_spacing_hz;
  if (!(lowest > 0.0)) throw DomainError("subcarrier grid extends below 0 Hz");
}

pose::PoseLandmarks canonical_pose(double frame_width, double frame_height) {
  static constexpr std::array<pose::Point, pose::kJointCount> kReference = {{
      {320, 90},  {330, 80},  {310, 80},  {342, 86},  {298, 86},  {365, 150},
      {275, 150}, {385, 225}, {255, 225}, {395, 295}, {245, 295}, {350, 290},
      {290, 290}, {355, 370}, {285, 370}, {358, 445}, {282, 445},
  }};
  const double sx = frame_width / 640.0, sy = frame_height / 480.0;
  pose::PoseLandmarks p;
  for (std::size_t j = 0; j < pose::kJointCount; ++j) p[j] = {kReference[j].x * sx, kReference[j].y * sy};
  return p;
}

Scene make_scene(const SceneConfig& config) {
  config.validate();

  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::array<double, kSinusoids> freq{};
  for (std::size_t k = 0; k < kSinusoids; ++k) freq[k] = static_cast<double>(k + 1) / kPeriodFrames;

  struct Term {
    double amp_x, phase_x, amp_y, phase_y;
  };
  const double sx = config.frame_width / 640.0, sy = config.frame_height / 480.0;
  std::array<Term, kSinusoids> sway{};
  for (std::size_t k = 0; k < kSinusoids; ++k) {
    auto& t = sway[k];
    const double harmonic = static_cast<double>(k + 1);
    t.amp_x = kSwayPxX * sx * (0.5 + 0.5 * unit(gen)) / harmonic;
    t.phase_x = 2.0 * std::numbers::pi * unit(gen);
    t.amp_y = kSwayPxY * sy * (0.5 + 0.5 * unit(gen)) / harmonic;
    t.phase_y = 2.0 * std::numbers::pi * unit(gen);
  }
  std::array<std::array<Term, kSinusoids>, pose::kJointCount> terms{};
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    for (auto& t : terms[j]) {
      t.amp_x = kJointMotionPx[j] * sx * (0.3 + 0.7 * unit(gen));
      t.phase_x = 2.0 * std::numbers::pi * unit(gen);
      t.amp_y = 0.6 * kJointMotionPx[j] * sy * (0.3 + 0.7 * unit(gen));
      t.phase_y = 2.0 * std::numbers::pi * unit(gen);
    }
  }

  const pose::PoseLandmarks base = canonical_pose(config.frame_width, config.frame_height);
  const double max_x = std::nextafter(config.frame_width, 0.0);
  const double max_y = std::nextafter(config.frame_height, 0.0);

  Scene scene;
  scene.config = config;
  scene.landmarks_per_frame.resize(config.n_frames);
  for (std::size_t f = 0; f < config.n_frames; ++f) {
    auto& frame = scene.landmarks_per_frame[f];
    const double t = static_cast<double>(f);
    double dx = 0.0, dy = 0.0;
    for (std::size_t k = 0; k < kSinusoids; ++k) {
      const double w = 2.0 * std::numbers::pi * freq[k] * t;
      dx += sway[k].amp_x * std::sin(w + sway[k].phase_x);
      dy += sway[k].amp_y * std::sin(w + sway[k].phase_y);
    }
    for (std::size_t j = 0; j < pose::kJointCount; ++j) {
      double x = base[j].x + dx, y = base[j].y + dy;
      for (std::size_t k = 0; k < kSinusoids; ++k) {
        const double w = 2.0 * std::numbers::pi * freq[k] * t;
        x += terms[j][k].amp_x * std::sin(w + terms[j][k].phase_x);
        y += terms[j][k].amp_y * std::sin(w + terms[j][k].phase_y);
      }
      frame[j] = {std::clamp(x, 0.0, max_x), std::clamp(y, 0.0, max_y)};
    }
  }
  return scene;
}

pose::PoseLandmarks packet_pose(const Scene& scene, std::size_t frame_idx, std::size_t packet,
                                std::size_t packets_per_frame) {
  const auto& cur = scene.landmarks_per_frame.at(frame_idx);
  if (frame_idx + 1 >= scene.n_frames() || packet == 0) return cur;
  const auto& next = scene.landmarks_per_frame[frame_idx + 1];
  const double w = static_cast<double>(packet) / static_cast<double>(packets_per_frame);
  pose::PoseLandmarks out;
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    out[j] = {cur[j].x + w * (next[j].x - cur[j].x), cur[j].y + w * (next[j].y - cur[j].y)};
  }
  return out;
}

Vec3 antenna_position(const SceneConfig& config, std::size_t antenna) {
  Vec3 p = config.rx_pos;
  p[0] += static_cast<double>(antenna) * kRxAntennaSpacing;
  return p;
}

double subcarrier_frequency(const SceneConfig& config, std::size_t s) {
  return config.carrier_hz +
         (static_cast<double>(s) - static_cast<double>(kCenterSubcarrier)) * config.subcarrier_spacing_hz;
}

std::vector<csi::PathComponent> propagation_paths(const SceneConfig& config,
                                                  const pose::PoseLandmarks& pose,
                                                  std::size_t antenna) {
  const Vec3 rx = antenna_position(config, antenna);
  const std::size_t n_reflectors = std::min(config.n_body_paths, kReflectorJoints.size());

  std::vector<csi::PathComponent> paths;
  paths.reserve(1 + n_reflectors);
  const double d_los = distance(config.tx_pos, rx);
  paths.push_back({1.0 / (1.0 + d_los * d_los), 0.0, d_los / csi::kSpeedOfLight});
  for (std::size_t r = 0; r < n_reflectors; ++r) {
    const auto& lm = pose[kReflectorJoints[r]];
    const Vec3 body{lm.x * kMetersPerPixel, lm.y * kMetersPerPixel, kBodyPlaneDepth};
    const double d = distance(config.tx_pos, body) + distance(body, rx);
    paths.push_back({1.0 / (1.0 + d * d), 0.0, d / csi::kSpeedOfLight});
  }
  return paths;
}

std::vector<double> render_amplitudes(const Scene& scene, std::size_t frame_idx) {
  if (frame_idx >= scene.n_frames()) throw DomainError("frame index out of range");
  const SceneConfig& cfg = scene.config;
  constexpr std::size_t S = csi::kSubcarriers, T = csi::kPacketsPerFrame;

  std::vector<double> amp(csi::kAntennas * S * T);
  std::array<double, S> freqs{};
  for (std::size_t s = 0; s < S; ++s) freqs[s] = subcarrier_frequency(cfg, s);

  for (std::size_t t = 0; t < T; ++t) {
    const pose::PoseLandmarks p = packet_pose(scene, frame_idx, t);
    for (std::size_t a = 0; a < csi::kAntennas; ++a) {
      const auto paths = propagation_paths(cfg, p, a);
      for (std::size_t s = 0; s < S; ++s) amp[(a * S + s) * T + t] = csi::amplitude(csi::superpose(paths, freqs[s]));
    }
  }

  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 gen(rng::splitmix64(cfg.seed ^ rng::splitmix64(frame_idx + 1)));
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (auto& v : amp) v = std::max(0.0, v + noise(gen));
  }
  return amp;
}

csi::CsiFrame render_csi(const Scene& scene, std::size_t frame_idx) {
  const auto amp = render_amplitudes(scene, frame_idx);
  csi::CsiFrame frame;
  std::transform(amp.begin(), amp.end(), frame.values().begin(), [](double v) { return static_cast<float>(v); });
  return frame;
}

}  // namespace wifipose::synth
