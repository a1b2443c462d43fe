#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "wifipose/pose.hpp"

namespace wifipose::eval {

struct PckConfig {
  /// Percent thresholds; a = value / 100.
  std::vector<double> thresholds{5, 10, 20, 30, 40, 50};
  /// Frames whose ground-truth torso is shorter than this (pixels) are skipped.
  double torso_epsilon = 1e-6;

  /// Throws ConfigError unless thresholds are strictly increasing in (0, 100].
  void validate() const;
};

struct PckReport {
  std::vector<double> thresholds;
  /// [17][n_thresholds] percentages.
  std::vector<std::vector<double>> per_joint;
  /// Unweighted mean of the joint rows.
  std::vector<double> average;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped_degenerate = 0;
};

/// Percentage of frames in which each joint lies within a * torso of the
/// ground truth (Euclidean distance, inclusive). Any positive, strictly
/// increasing thresholds are accepted here. The torso is the ground-truth
/// right-shoulder to left-hip distance. Throws DomainError when no frame is
/// evaluable or the inputs are empty or of unequal length.
PckReport pck(std::span<const pose::PoseLandmarks> preds, std::span<const pose::PoseLandmarks> gts,
              const PckConfig& cfg = {});

/// Fixed-width text table: a header row, one row per joint, and an Average row,
/// every value with two decimals.
std::string report_table(const PckReport& report,
                         std::span<const std::string_view> joint_names = pose::kJointNames);

nlohmann::json report_json(const PckReport& report,
                           std::span<const std::string_view> joint_names = pose::kJointNames);

}  // namespace wifipose::eval
