#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wifipose/csi.hpp"
#include "wifipose/pose.hpp"

namespace wifipose::dataio {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kCsiFile = "csi.f32";
inline constexpr const char* kKeypointsFile = "keypoints.f32";
inline constexpr const char* kSplitsFile = "splits.json";

/// One video frame's annotation paired with its CSI window.
struct SyncSample {
  csi::CsiFrame csi;
  pose::PoseLandmarks annotation;
  std::size_t frame_index = 0;

  bool operator==(const SyncSample&) const = default;
};

struct DatasetManifest {
  std::size_t n_samples = 0;
  std::size_t antennas = csi::kAntennas;
  std::size_t subcarriers = csi::kSubcarriers;
  std::size_t packets_per_frame = csi::kPacketsPerFrame;
  double frame_width = 640.0;
  double frame_height = 480.0;
  std::uint64_t split_seed = 0;
  int format_version = kFormatVersion;

  std::size_t csi_values_per_sample() const { return antennas * subcarriers * packets_per_frame; }
  bool operator==(const DatasetManifest&) const = default;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;

  bool operator==(const Splits&) const = default;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SyncSample> samples;
  Splits splits;
};

/// Rounds every coordinate to float32, the precision keypoints are stored at.
pose::PoseLandmarks quantize_f32(const pose::PoseLandmarks& p);

/// Half-open packet range [frame_idx * P, (frame_idx + 1) * P) synchronized with a video frame.
std::pair<std::size_t, std::size_t> window_for_frame(std::size_t frame_idx, std::size_t packets_per_frame);

/// Seeded sample-level split. val = ceil(val_frac * n), test = ceil(test_frac * n),
/// train takes the remainder. Each list is sorted ascending.
Splits split(std::size_t n, double val_frac, double test_frac, std::uint64_t seed);

/// Byte sizes of the two binary payloads for `n` samples under `manifest`'s shape.
std::size_t csi_payload_bytes(const DatasetManifest& manifest, std::size_t n);
std::size_t keypoints_payload_bytes(std::size_t n);

/// Writes manifest.json, csi.f32, keypoints.f32 and splits.json into `dir`
/// (created if missing; its parent must exist).
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Throws NotFoundError for missing files and CorruptDatasetError when payload
/// sizes disagree with the manifest.
Dataset load_dataset(const std::filesystem::path& dir);

/// Little-endian float32 helpers shared with the checkpoint format.
void write_f32_le(std::ostream& out, std::span<const float> values);
void read_f32_le(std::istream& in, std::span<float> values);

}  // namespace wifipose::dataio
