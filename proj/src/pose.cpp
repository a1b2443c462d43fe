#include "wifipose/pose.hpp"

#include <cmath>

namespace wifipose::pose {

const std::array<std::string_view, kJointCount> kJointNames = {
    "Nose",       "L.Eye",      "R.Eye",   "L.Ear",   "R.Ear",  "L.Shoulder",
    "R.Shoulder", "L.Elbow",    "R.Elbow", "L.Wrist", "R.Wrist", "L.Hip",
    "R.Hip",      "L.Knee",     "R.Knee",  "L.Ankle", "R.Ankle",
};

const std::array<std::pair<Joint, Joint>, 19> kSkeletonEdges = {{
    {kLeftAnkle, kLeftKnee},
    {kLeftKnee, kLeftHip},
    {kRightAnkle, kRightKnee},
    {kRightKnee, kRightHip},
    {kLeftHip, kRightHip},
    {kLeftShoulder, kLeftHip},
    {kRightShoulder, kRightHip},
    {kLeftShoulder, kRightShoulder},
    {kLeftShoulder, kLeftElbow},
    {kRightShoulder, kRightElbow},
    {kLeftElbow, kLeftWrist},
    {kRightElbow, kRightWrist},
    {kLeftEye, kRightEye},
    {kNose, kLeftEye},
    {kNose, kRightEye},
    {kLeftEye, kLeftEar},
    {kRightEye, kRightEar},
    {kLeftEar, kLeftShoulder},
    {kRightEar, kRightShoulder},
}};

double torso_length(const PoseLandmarks& p) {
  return std::hypot(p[kRightShoulder].x - p[kLeftHip].x, p[kRightShoulder].y - p[kLeftHip].y);
}

bool is_finite(const PoseLandmarks& p) {
  for (const auto& pt : p.points) {
    if (!std::isfinite(pt.x) || !std::isfinite(pt.y)) return false;
  }
  return true;
}

}  // namespace wifipose::pose
