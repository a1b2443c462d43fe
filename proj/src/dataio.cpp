#include "wifipose/dataio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

#include "wifipose/errors.hpp"
#include "wifipose/random.hpp"

namespace wifipose::dataio {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t ceil_count(double frac, std::size_t n) {
  const double x = frac * static_cast<double>(n);
  // Absorb representation error so that e.g. 0.2 * 10 counts as exactly 2.
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw NotFoundError("missing file: " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CorruptDatasetError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFoundError("cannot open for writing: " + p.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::vector<float> read_payload(const fs::path& p, std::size_t expected_bytes) {
  if (!fs::exists(p)) throw NotFoundError("missing file: " + p.string());
  const auto actual = fs::file_size(p);
  if (actual != expected_bytes) {
    throw CorruptDatasetError(p.filename().string() + " holds " + std::to_string(actual) + " bytes, manifest implies " +
                              std::to_string(expected_bytes));
  }
  std::vector<float> values(expected_bytes / sizeof(float));
  std::ifstream in(p, std::ios::binary);
  read_f32_le(in, values);
  if (!in) throw CorruptDatasetError("short read: " + p.string());
  return values;
}

}  // namespace

pose::PoseLandmarks quantize_f32(const pose::PoseLandmarks& p) {
  pose::PoseLandmarks q;
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    q[j] = {static_cast<float>(p[j].x), static_cast<float>(p[j].y)};
  }
  return q;
}

std::pair<std::size_t, std::size_t> window_for_frame(std::size_t frame_idx, std::size_t packets_per_frame) {
  return {frame_idx * packets_per_frame, (frame_idx + 1) * packets_per_frame};
}

Splits split(std::size_t n, double val_frac, double test_frac, std::uint64_t seed) {
  if (!(val_frac >= 0.0) || !(test_frac >= 0.0) || !(val_frac + test_frac < 1.0)) {
    throw DomainError("split fractions must be non-negative and sum to less than 1");
  }
  const std::size_t n_val = ceil_count(val_frac, n);
  const std::size_t n_test = ceil_count(test_frac, n);
  if (n < 3 || n_val == 0 || n_test == 0 || n_val + n_test >= n) {
    throw DomainError("cannot form three non-empty splits");
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 gen(seed);
  rng::shuffle(std::span<std::size_t>(perm), gen);

  Splits s;
  s.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val),
                perm.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::size_t csi_payload_bytes(const DatasetManifest& manifest, std::size_t n) {
  return n * manifest.csi_values_per_sample() * sizeof(float);
}

std::size_t keypoints_payload_bytes(std::size_t n) { return n * pose::kJointCount * 2 * sizeof(float); }

void write_f32_le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      char b[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                   static_cast<char>(bits >> 24)};
      out.write(b, 4);
    }
  }
}

void read_f32_le(std::istream& in, std::span<float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float& v : values) {
      unsigned char b[4];
      in.read(reinterpret_cast<char*>(b), 4);
      const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t{b[3]} << 24);
      v = std::bit_cast<float>(bits);
    }
  }
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  const auto& m = dataset.manifest;
  if (m.n_samples != dataset.samples.size()) {
    throw ShapeError("manifest n_samples=" + std::to_string(m.n_samples) + " but " +
                     std::to_string(dataset.samples.size()) + " samples given");
  }
  for (const auto& s : dataset.samples) {
    if (s.csi.antennas() != m.antennas || s.csi.subcarriers() != m.subcarriers || s.csi.packets() != m.packets_per_frame) {
      throw ShapeError("sample CSI shape disagrees with manifest");
    }
  }

  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  if (!fs::exists(parent)) throw NotFoundError("parent directory does not exist: " + parent.string());
  fs::create_directories(dir);

  json manifest = {
      {"format_version", m.format_version},
      {"n_samples", m.n_samples},
      {"antennas", m.antennas},
      {"subcarriers", m.subcarriers},
      {"packets_per_frame", m.packets_per_frame},
      {"frame_width", m.frame_width},
      {"frame_height", m.frame_height},
      {"split_seed", m.split_seed},
      {"joints", pose::kJointCount},
  };
  json frames = json::array();
  for (const auto& s : dataset.samples) frames.push_back(s.frame_index);
  manifest["frame_indices"] = std::move(frames);
  write_text(dir / kManifestFile, manifest.dump(2) + "\n");

  {
    std::ofstream out(dir / kCsiFile, std::ios::binary | std::ios::trunc);
    if (!out) throw NotFoundError("cannot open for writing: " + (dir / kCsiFile).string());
    for (const auto& s : dataset.samples) write_f32_le(out, s.csi.values());
    if (!out) throw std::runtime_error("write failed: " + (dir / kCsiFile).string());
  }
  {
    std::ofstream out(dir / kKeypointsFile, std::ios::binary | std::ios::trunc);
    if (!out) throw NotFoundError("cannot open for writing: " + (dir / kKeypointsFile).string());
    std::array<float, pose::kJointCount * 2> buf{};
    for (const auto& s : dataset.samples) {
      for (std::size_t j = 0; j < pose::kJointCount; ++j) {
        buf[2 * j] = static_cast<float>(s.annotation[j].x);
        buf[2 * j + 1] = static_cast<float>(s.annotation[j].y);
      }
      write_f32_le(out, buf);
    }
    if (!out) throw std::runtime_error("write failed: " + (dir / kKeypointsFile).string());
  }

  const json splits = {{"train", dataset.splits.train}, {"val", dataset.splits.val}, {"test", dataset.splits.test}};
  write_text(dir / kSplitsFile, splits.dump() + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("dataset directory not found: " + dir.string());
  const json mj = read_json(dir / kManifestFile);

  Dataset ds;
  auto& m = ds.manifest;
  try {
    m.format_version = mj.at("format_version").get<int>();
    m.n_samples = mj.at("n_samples").get<std::size_t>();
    m.antennas = mj.at("antennas").get<std::size_t>();
    m.subcarriers = mj.at("subcarriers").get<std::size_t>();
    m.packets_per_frame = mj.at("packets_per_frame").get<std::size_t>();
    m.frame_width = mj.at("frame_width").get<double>();
    m.frame_height = mj.at("frame_height").get<double>();
    m.split_seed = mj.at("split_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CorruptDatasetError(std::string("manifest.json: ") + e.what());
  }
  if (m.format_version != kFormatVersion) {
    throw CorruptDatasetError("unsupported dataset format_version " + std::to_string(m.format_version));
  }

  const auto csi = read_payload(dir / kCsiFile, csi_payload_bytes(m, m.n_samples));
  const auto kps = read_payload(dir / kKeypointsFile, keypoints_payload_bytes(m.n_samples));

  std::vector<std::size_t> frame_indices(m.n_samples);
  std::iota(frame_indices.begin(), frame_indices.end(), std::size_t{0});
  if (mj.contains("frame_indices")) {
    frame_indices = mj["frame_indices"].get<std::vector<std::size_t>>();
    if (frame_indices.size() != m.n_samples) throw CorruptDatasetError("frame_indices length disagrees with n_samples");
  }

  const std::size_t per = m.csi_values_per_sample();
  ds.samples.resize(m.n_samples);
  for (std::size_t i = 0; i < m.n_samples; ++i) {
    auto& s = ds.samples[i];
    s.csi = csi::CsiFrame(m.antennas, m.subcarriers, m.packets_per_frame);
    std::copy_n(csi.begin() + static_cast<std::ptrdiff_t>(i * per), per, s.csi.values().begin());
    for (std::size_t j = 0; j < pose::kJointCount; ++j) {
      s.annotation[j] = {kps[(i * pose::kJointCount + j) * 2], kps[(i * pose::kJointCount + j) * 2 + 1]};
    }
    s.frame_index = frame_indices[i];
  }

  const json sj = read_json(dir / kSplitsFile);
  try {
    ds.splits.train = sj.at("train").get<std::vector<std::size_t>>();
    ds.splits.val = sj.at("val").get<std::vector<std::size_t>>();
    ds.splits.test = sj.at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw CorruptDatasetError(std::string("splits.json: ") + e.what());
  }
  for (const auto* ids : {&ds.splits.train, &ds.splits.val, &ds.splits.test}) {
    for (auto id : *ids) {
      if (id >= m.n_samples) throw CorruptDatasetError("split id " + std::to_string(id) + " out of range");
    }
  }
  return ds;
}

}  // namespace wifipose::dataio
