#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <utility>

namespace wifipose::pose {

inline constexpr std::size_t kJointCount = 17;

enum Joint : std::size_t {
  kNose = 0,
  kLeftEye,
  kRightEye,
  kLeftEar,
  kRightEar,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
  kLeftHip,
  kRightHip,
  kLeftKnee,
  kRightKnee,
  kLeftAnkle,
  kRightAnkle,
};

/// Display names in landmark order, as used by report rows.
extern const std::array<std::string_view, kJointCount> kJointNames;

/// COCO 17-keypoint skeleton limbs.
extern const std::array<std::pair<Joint, Joint>, 19> kSkeletonEdges;

struct Point {
  double x = 0.0;  // a: column, pixels
  double y = 0.0;  // b: row, pixels

  bool operator==(const Point&) const = default;
};

/// 17 (a, b) pixel coordinates in the fixed joint order above.
struct PoseLandmarks {
  std::array<Point, kJointCount> points{};

  Point& operator[](std::size_t j) { return points[j]; }
  const Point& operator[](std::size_t j) const { return points[j]; }
  bool operator==(const PoseLandmarks&) const = default;
};

/// Right-shoulder to left-hip distance, the PCK normalizer.
double torso_length(const PoseLandmarks& p);

bool is_finite(const PoseLandmarks& p);

}  // namespace wifipose::pose
