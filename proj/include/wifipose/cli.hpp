#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wifipose/config.hpp"
#include "wifipose/dataio.hpp"
#include "wifipose/eval.hpp"
#include "wifipose/pose.hpp"

namespace wifipose::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// One line of the landmark interchange format:
/// {"frame": k, "points": [[a, b], ... x17]} in pixels.
struct LandmarkRecord {
  std::size_t frame = 0;
  pose::PoseLandmarks points;

  bool operator==(const LandmarkRecord&) const = default;
};

std::string landmark_line(const LandmarkRecord& rec);
/// Throws FormatError carrying `line_no`.
LandmarkRecord parse_landmark_line(std::string_view line, std::size_t line_no);
/// Blank lines are skipped; line numbers in errors are 1-based.
std::vector<LandmarkRecord> read_landmarks(const std::filesystem::path& file);
void write_landmarks(const std::filesystem::path& file, const std::vector<LandmarkRecord>& records);

/// Standalone SVG: skeleton edges as <line>, one <circle> per joint.
std::string render_svg(const pose::PoseLandmarks& pose, double width, double height);

/// File name used for frame `frame` by cmd_render.
std::string svg_name(std::size_t frame);

/// Synthesizes a scene, renders every frame and writes the dataset to
/// paths.dataset_dir.
dataio::Dataset cmd_synth(const config::RunConfig& cfg, std::ostream& log);

/// Trains on paths.dataset_dir; writes the best checkpoint to paths.checkpoint
/// and output_dir/history.jsonl.
train::TrainResult cmd_train(const config::RunConfig& cfg, std::ostream& log);

/// PCK on the test split, written to output_dir/pck.txt and pck.json. With
/// `predictions_file`, landmarks are read from it (matched by frame) instead of
/// running the checkpoint.
eval::PckReport cmd_eval(const config::RunConfig& cfg, const std::optional<std::filesystem::path>& predictions_file,
                         std::ostream& log);

/// Landmarks for every sample of `split` ("train", "val", "test" or "all").
std::vector<LandmarkRecord> cmd_infer(const config::RunConfig& cfg, std::string_view split,
                                      const std::filesystem::path& out_file, std::ostream& log);

/// One SVG per input line, written into `out_dir`. Returns the files written.
std::vector<std::filesystem::path> cmd_render(const std::filesystem::path& predictions_file,
                                              const std::filesystem::path& out_dir, double width, double height);

/// Full command-line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wifipose::cli
