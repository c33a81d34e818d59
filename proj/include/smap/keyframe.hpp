#pragma once

// MVS window selection: covisibility and pose-distance filtering followed by
// ranking with the translation/rotation penalty.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "smap/core.hpp"

namespace smap {

struct KeyframeRecord {
  std::int64_t id = 0;
  RigidPose pose;  // world-from-camera
  std::set<std::int64_t> landmark_ids;
  double timestamp = 0.0;
};

enum class DistanceFilterMode {
  min_separation,  // drop candidates closer than p_th
  max_distance,    // drop candidates farther than p_th
};

struct SelectionConfig {
  double p_th = 0.20;
  double t_th = 0.25;
  double alpha_near = 5.0;
  double alpha_far = 1.0;
  int min_covisibility = 15;
  int window_size = 8;
  DistanceFilterMode distance_filter_mode = DistanceFilterMode::min_separation;

  void validate() const {
    if (window_size < 2) throw Error(Errc::ConfigError, "selection.window_size must be >= 2");
    if (!(p_th > 0.0)) throw Error(Errc::ConfigError, "selection.p_th must be > 0");
    if (!(t_th > 0.0)) throw Error(Errc::ConfigError, "selection.t_th must be > 0");
    if (!(alpha_far > 0.0) || !(alpha_near >= alpha_far))
      throw Error(Errc::ConfigError, "selection requires alpha_near >= alpha_far > 0");
    if (min_covisibility < 0) throw Error(Errc::ConfigError, "selection.min_covisibility must be >= 0");
  }
};

/// tr(I - R), clamped at zero against rounding.
inline double rotation_trace_gap(const Mat3& r) { return std::max(0.0, 3.0 - r.trace()); }

/// sqrt(|t| + 2/3 tr(I - R)). Mixes metres and radians-squared, as defined.
inline double pose_distance(const RigidPose& rel) {
  return std::sqrt(rel.translation.norm() + (2.0 / 3.0) * rotation_trace_gap(rel.rotation));
}

inline double penalty(const RigidPose& rel, const SelectionConfig& cfg) {
  const double t = rel.translation.norm();
  const double alpha = t <= cfg.t_th ? cfg.alpha_near : cfg.alpha_far;
  const double dt = t - cfg.t_th;
  return alpha * dt * dt + (2.0 / 3.0) * rotation_trace_gap(rel.rotation);
}

inline int covisibility(const KeyframeRecord& a, const KeyframeRecord& b) {
  // Walk the two ordered sets in lock-step.
  int shared = 0;
  auto ia = a.landmark_ids.begin();
  auto ib = b.landmark_ids.begin();
  while (ia != a.landmark_ids.end() && ib != b.landmark_ids.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++shared;
      ++ia;
      ++ib;
    }
  }
  return shared;
}

/// True when `cand` survives the covisibility and distance filters.
inline bool passes_selection_filters(const KeyframeRecord& reference, const KeyframeRecord& cand,
                                     const SelectionConfig& cfg) {
  if (covisibility(reference, cand) < cfg.min_covisibility) return false;
  const double dist = pose_distance(relative_pose(reference.pose, cand.pose));
  if (cfg.distance_filter_mode == DistanceFilterMode::min_separation) return dist >= cfg.p_th;
  return dist <= cfg.p_th;
}

/// Reference first, then the window_size - 1 lowest-penalty sources.
/// Ties: more recent timestamp first, then smaller id.
inline std::vector<KeyframeRecord> select_window(const KeyframeRecord& reference,
                                                 std::span<const KeyframeRecord> candidates,
                                                 const SelectionConfig& cfg) {
  cfg.validate();
  reference.pose.validate();

  struct Ranked {
    double penalty;
    const KeyframeRecord* record;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(candidates.size());
  for (const auto& cand : candidates) {
    if (!passes_selection_filters(reference, cand, cfg)) continue;
    ranked.push_back({penalty(relative_pose(reference.pose, cand.pose), cfg), &cand});
  }

  const auto needed = static_cast<std::size_t>(cfg.window_size - 1);
  if (ranked.size() < needed)
    throw Error(Errc::InsufficientKeyframes, std::to_string(ranked.size()) +
                                                 " candidates survive filtering, need " +
                                                 std::to_string(needed));

  auto before = [](const Ranked& a, const Ranked& b) {
    if (a.penalty != b.penalty) return a.penalty < b.penalty;
    if (a.record->timestamp != b.record->timestamp) return a.record->timestamp > b.record->timestamp;
    return a.record->id < b.record->id;
  };
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(needed),
                    ranked.end(), before);

  std::vector<KeyframeRecord> window;
  window.reserve(needed + 1);
  window.push_back(reference);
  for (std::size_t i = 0; i < needed; ++i) window.push_back(*ranked[i].record);
  return window;
}

}  // namespace smap
