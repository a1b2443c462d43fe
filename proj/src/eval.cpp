#include "wifipose/eval.hpp"

#include <cmath>
#include <cstdio>

#include "wifipose/errors.hpp"

namespace wifipose::eval {
namespace {

std::string format_threshold(double t) {
  char buf[32];
  if (t == std::floor(t)) {
    std::snprintf(buf, sizeof buf, "PCK@%.0f", t);
  } else {
    std::snprintf(buf, sizeof buf, "PCK@%g", t);
  }
  return buf;
}

constexpr int kNameWidth = 12;
constexpr int kCellWidth = 9;

// The metric itself is defined for any positive threshold; configs are further
// limited to percentages in (0, 100].
void check_thresholds(const PckConfig& cfg, bool capped) {
  if (cfg.thresholds.empty()) throw ConfigError("at least one PCK threshold is required");
  for (std::size_t i = 0; i < cfg.thresholds.size(); ++i) {
    const double t = cfg.thresholds[i];
    if (!(t > 0.0) || !std::isfinite(t) || (capped && t > 100.0)) {
      throw ConfigError(capped ? "PCK thresholds must lie in (0, 100]" : "PCK thresholds must be positive");
    }
    if (i > 0 && !(t > cfg.thresholds[i - 1])) throw ConfigError("PCK thresholds must be strictly increasing");
  }
  if (!(cfg.torso_epsilon >= 0.0)) throw ConfigError("torso_epsilon must be non-negative");
}

}  // namespace

void PckConfig::validate() const { check_thresholds(*this, true); }

PckReport pck(std::span<const pose::PoseLandmarks> preds, std::span<const pose::PoseLandmarks> gts,
              const PckConfig& cfg) {
  check_thresholds(cfg, false);
  if (preds.size() != gts.size()) throw DomainError("pck: prediction and ground-truth counts differ");
  if (preds.empty()) throw DomainError("no evaluable frames");

  const std::size_t K = cfg.thresholds.size();
  std::vector<std::vector<std::size_t>> correct(pose::kJointCount, std::vector<std::size_t>(K, 0));
  PckReport r;
  r.thresholds = cfg.thresholds;

  for (std::size_t f = 0; f < preds.size(); ++f) {
    const double torso = pose::torso_length(gts[f]);
    if (!(torso >= cfg.torso_epsilon) || torso == 0.0) {
      ++r.n_skipped_degenerate;
      continue;
    }
    ++r.n_evaluated;
    for (std::size_t j = 0; j < pose::kJointCount; ++j) {
      const double d = std::hypot(preds[f][j].x - gts[f][j].x, preds[f][j].y - gts[f][j].y);
      const double ratio = d / torso;
      for (std::size_t k = 0; k < K; ++k) {
        if (ratio <= cfg.thresholds[k] / 100.0) ++correct[j][k];
      }
    }
  }
  if (r.n_evaluated == 0) throw DomainError("no evaluable frames");

  const double n = static_cast<double>(r.n_evaluated);
  r.per_joint.assign(pose::kJointCount, std::vector<double>(K));
  r.average.assign(K, 0.0);
  for (std::size_t j = 0; j < pose::kJointCount; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      r.per_joint[j][k] = 100.0 * static_cast<double>(correct[j][k]) / n;
      r.average[k] += r.per_joint[j][k];
    }
  }
  for (auto& a : r.average) a /= static_cast<double>(pose::kJointCount);
  return r;
}

std::string report_table(const PckReport& report, std::span<const std::string_view> joint_names) {
  if (joint_names.size() != report.per_joint.size()) {
    throw ShapeError("report_table: " + std::to_string(joint_names.size()) + " names for " +
                     std::to_string(report.per_joint.size()) + " joints");
  }
  std::string out;
  char buf[64];
  auto row = [&](std::string_view name, const std::vector<double>& values) {
    std::snprintf(buf, sizeof buf, "%-*.*s", kNameWidth, static_cast<int>(name.size()), name.data());
    out += buf;
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%*.2f", kCellWidth, v);
      out += buf;
    }
    out += '\n';
  };

  std::snprintf(buf, sizeof buf, "%-*s", kNameWidth, "Keypoint");
  out += buf;
  for (double t : report.thresholds) {
    std::snprintf(buf, sizeof buf, "%*s", kCellWidth, format_threshold(t).c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t j = 0; j < report.per_joint.size(); ++j) row(joint_names[j], report.per_joint[j]);
  row("Average", report.average);
  return out;
}

nlohmann::json report_json(const PckReport& report, std::span<const std::string_view> joint_names) {
  nlohmann::json joints = nlohmann::json::object();
  for (std::size_t j = 0; j < report.per_joint.size() && j < joint_names.size(); ++j) {
    joints[std::string(joint_names[j])] = report.per_joint[j];
  }
  nlohmann::json order = nlohmann::json::array();
  for (auto n : joint_names) order.push_back(std::string(n));
  return {
      {"thresholds", report.thresholds},
      {"joint_order", std::move(order)},
      {"per_joint", std::move(joints)},
      {"average", report.average},
      {"n_evaluated", report.n_evaluated},
      {"n_skipped_degenerate", report.n_skipped_degenerate},
  };
}

}  // namespace wifipose::eval
