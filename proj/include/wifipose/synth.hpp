#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wifipose/csi.hpp"
#include "wifipose/pose.hpp"

namespace wifipose::synth {

using Vec3 = std::array<double, 3>;

/// Pixel-to-meter scale used to lift landmarks into the room.
inline constexpr double kMetersPerPixel = 1.0 / 100.0;
/// Depth (z, meters) of the plane the subject stands in.
inline constexpr double kBodyPlaneDepth = 2.5;
/// Spacing between receive antennas along x (meters).
inline constexpr double kRxAntennaSpacing = 0.06;
/// Subcarrier index at the carrier frequency.
inline constexpr std::size_t kCenterSubcarrier = 57;
/// Joints that act as reflectors, in priority order. n_body_paths takes a prefix.
inline constexpr std::array<pose::Joint, 8> kReflectorJoints = {
    pose::kLeftShoulder, pose::kRightShoulder, pose::kLeftElbow, pose::kRightElbow,
    pose::kLeftWrist,    pose::kRightWrist,    pose::kLeftHip,   pose::kRightHip,
};

struct SceneConfig {
  std::uint64_t seed = 0;
  std::size_t n_frames = 1;
  double frame_width = 640.0;
  double frame_height = 480.0;
  std::size_t n_body_paths = 6;
  double noise_sigma = 0.01;
  double carrier_hz = 5.32e9;
  double subcarrier_spacing_hz = 312.5e3;
  // Transmitter and first receive antenna side by side, facing the subject
  // from 2.5 m in front of the body plane.
  Vec3 tx_pos{3.4, 2.4, 0.0};
  Vec3 rx_pos{2.9, 2.4, 0.0};

  /// Throws DomainError when an invariant does not hold.
  void validate() const;

  bool operator==(const SceneConfig&) const = default;
};

struct Scene {
  std::vector<pose::PoseLandmarks> landmarks_per_frame;
  SceneConfig config;

  std::size_t n_frames() const { return landmarks_per_frame.size(); }
  bool operator==(const Scene&) const = default;
};

/// Smooth seeded pose trajectories around a canonical standing skeleton: a
/// whole-body sway plus per-joint limb motion, both sums of three harmonics of
/// a 50-frame period, so the activity repeats exactly every 50 frames.
Scene make_scene(const SceneConfig& config);

/// Pose seen by packet `packet` of frame `frame_idx`: linear interpolation
/// `packet / packets_per_frame` of the way toward the next frame (the last
/// frame holds still).
pose::PoseLandmarks packet_pose(const Scene& scene, std::size_t frame_idx, std::size_t packet,
                                std::size_t packets_per_frame = csi::kPacketsPerFrame);

Vec3 antenna_position(const SceneConfig& config, std::size_t antenna);

/// Center frequency of subcarrier `s` in Hz.
double subcarrier_frequency(const SceneConfig& config, std::size_t s);

/// Line-of-sight path followed by one reflection per active reflector joint.
std::vector<csi::PathComponent> propagation_paths(const SceneConfig& config,
                                                  const pose::PoseLandmarks& pose,
                                                  std::size_t antenna);

/// Double-precision amplitudes for one frame, [antenna][subcarrier][packet],
/// noise included. render_csi is this rounded to float.
std::vector<double> render_amplitudes(const Scene& scene, std::size_t frame_idx);

/// Amplitude CSI for one frame. Deterministic in (scene seed, frame_idx) and
/// independent of rendering order.
csi::CsiFrame render_csi(const Scene& scene, std::size_t frame_idx);

/// Canonical upright skeleton for a 640x480 frame, scaled to the configured size.
pose::PoseLandmarks canonical_pose(double frame_width, double frame_height);

}  // namespace wifipose::synth
