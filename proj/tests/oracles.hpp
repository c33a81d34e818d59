#pragma once

// Brute-force reference implementations used as test oracles. They are
// written from the definitions, not from the library code.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "smap/smap.hpp"

namespace smap::oracle {

/// tr(I - R) from the rotation angle: 3 - (1 + 2 cos theta).
inline double trace_gap(const Mat3& r) {
  const double angle = Eigen::AngleAxisd(r).angle();
  return 2.0 - 2.0 * std::cos(angle);
}

inline double penalty(const RigidPose& ref, const RigidPose& src, const SelectionConfig& cfg) {
  // Source-from-reference written out by hand.
  const Mat3 r = src.rotation.transpose() * ref.rotation;
  const Vec3 t = src.rotation.transpose() * (ref.translation - src.translation);
  const double n = t.norm();
  const double alpha = n <= cfg.t_th ? cfg.alpha_near : cfg.alpha_far;
  return alpha * (n - cfg.t_th) * (n - cfg.t_th) + 2.0 / 3.0 * trace_gap(r);
}

inline double distance(const RigidPose& ref, const RigidPose& src) {
  const Mat3 r = src.rotation.transpose() * ref.rotation;
  const Vec3 t = src.rotation.transpose() * (ref.translation - src.translation);
  return std::sqrt(t.norm() + 2.0 / 3.0 * trace_gap(r));
}

/// Filter, then stable sort by (penalty, -timestamp, id). Returns ids of the
/// window (reference first), or nullopt when too few candidates survive.
inline std::optional<std::vector<std::int64_t>> select_window(const KeyframeRecord& ref,
                                                              const std::vector<KeyframeRecord>& cands,
                                                              const SelectionConfig& cfg) {
  struct Row {
    double penalty;
    double timestamp;
    std::int64_t id;
  };
  std::vector<Row> rows;
  for (const auto& c : cands) {
    std::vector<std::int64_t> shared;
    std::set_intersection(ref.landmark_ids.begin(), ref.landmark_ids.end(), c.landmark_ids.begin(),
                          c.landmark_ids.end(), std::back_inserter(shared));
    if (static_cast<int>(shared.size()) < cfg.min_covisibility) continue;
    const double d = distance(ref.pose, c.pose);
    const bool keep = cfg.distance_filter_mode == DistanceFilterMode::min_separation ? d >= cfg.p_th : d <= cfg.p_th;
    if (!keep) continue;
    rows.push_back({penalty(ref.pose, c.pose, cfg), c.timestamp, c.id});
  }
  if (static_cast<int>(rows.size()) < cfg.window_size - 1) return std::nullopt;
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.penalty != b.penalty) return a.penalty < b.penalty;
    if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
    return a.id < b.id;
  });
  std::vector<std::int64_t> out{ref.id};
  for (int i = 0; i < cfg.window_size - 1; ++i) out.push_back(rows[i].id);
  return out;
}

/// A random selection instance: a reference and up to `max_candidates`
/// candidates with poses around it, overlapping landmark sets, occasional
/// duplicate poses and timestamps so that ties occur.
struct SelectionInstance {
  KeyframeRecord reference;
  std::vector<KeyframeRecord> candidates;
  SelectionConfig cfg;
};

inline SelectionInstance random_selection_instance(std::mt19937_64& rng, int max_candidates = 50) {
  std::uniform_int_distribution<int> count_dist(0, max_candidates);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  SelectionInstance inst;
  inst.cfg.window_size = 2 + static_cast<int>(unit(rng) * 9);  // 2..10
  inst.cfg.min_covisibility = static_cast<int>(unit(rng) * 25);
  inst.cfg.distance_filter_mode = unit(rng) < 0.8 ? DistanceFilterMode::min_separation : DistanceFilterMode::max_distance;
  if (inst.cfg.distance_filter_mode == DistanceFilterMode::max_distance) inst.cfg.p_th = 0.5 + unit(rng);

  auto random_rotation = [&](double scale) {
    const Vec3 axis(normal(rng), normal(rng), normal(rng));
    return Eigen::AngleAxisd(scale * normal(rng), axis.normalized()).toRotationMatrix();
  };
  auto landmarks = [&](int centre) {
    std::set<std::int64_t> ids;
    const int n = 20 + static_cast<int>(unit(rng) * 40);
    for (int i = 0; i < n; ++i) ids.insert(centre + static_cast<int>(normal(rng) * 15));
    return ids;
  };

  inst.reference.id = 1000;
  inst.reference.timestamp = 100.0;
  inst.reference.pose = {random_rotation(1.0), Vec3(normal(rng), normal(rng), normal(rng))};
  inst.reference.landmark_ids = landmarks(500);

  const int n = count_dist(rng);
  for (int i = 0; i < n; ++i) {
    KeyframeRecord c;
    c.id = i;
    c.timestamp = std::floor(unit(rng) * 20.0);  // repeated timestamps
    if (i > 0 && unit(rng) < 0.15) {
      c.pose = inst.candidates[static_cast<std::size_t>(unit(rng) * i)].pose;  // duplicate pose
    } else {
      const Vec3 t = Vec3(normal(rng), normal(rng), normal(rng)).normalized() * (0.6 * unit(rng));
      c.pose = {inst.reference.pose.rotation * random_rotation(0.15), inst.reference.pose.translation + t};
    }
    c.landmark_ids = landmarks(500 + static_cast<int>(normal(rng) * 20));
    inst.candidates.push_back(std::move(c));
  }
  return inst;
}

/// Window ids from the library, or nullopt on InsufficientKeyframes.
inline std::optional<std::vector<std::int64_t>> library_window(const SelectionInstance& inst) {
  try {
    std::vector<std::int64_t> ids;
    for (const auto& r : smap::select_window(inst.reference, inst.candidates, inst.cfg)) ids.push_back(r.id);
    return ids;
  } catch (const Error& e) {
    if (e.code() != Errc::InsufficientKeyframes) throw;
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------

/// O(N^2) nearest distances.
inline std::vector<double> brute_nearest(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  std::vector<double> out;
  out.reserve(from.size());
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const double dx = p.x() - q.x(), dy = p.y() - q.y(), dz = p.z() - q.z();
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
    out.push_back(std::sqrt(best));
  }
  return out;
}

inline MeshMetrics brute_mesh_metrics(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt, double threshold_cm) {
  const auto a = brute_nearest(pred, gt);
  const auto c = brute_nearest(gt, pred);
  const double thr = threshold_cm / 100.0;
  double acc = 0, comp = 0;
  std::size_t prec = 0, rec = 0;
  for (double d : a) {
    acc += d;
    if (d < thr) ++prec;
  }
  for (double d : c) {
    comp += d;
    if (d < thr) ++rec;
  }
  MeshMetrics m;
  m.threshold = threshold_cm;
  m.accuracy = 100.0 * acc / a.size();
  m.completeness = 100.0 * comp / c.size();
  m.chamfer = 0.5 * (m.accuracy + m.completeness);
  m.precision = 100.0 * prec / a.size();
  m.recall = 100.0 * rec / c.size();
  m.f_score = m.precision > 0 && m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

inline bool identical(const MeshMetrics& a, const MeshMetrics& b) {
  return a.accuracy == b.accuracy && a.completeness == b.completeness && a.chamfer == b.chamfer &&
         a.precision == b.precision && a.recall == b.recall && a.f_score == b.f_score && a.threshold == b.threshold;
}

inline std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

// ---------------------------------------------------------------------------

/// Costs of an exact parabola a (k - k0)^2 + c over planes 0..D-1.
inline std::vector<double> parabola_costs(int planes, double k0, double a, double c) {
  std::vector<double> out(static_cast<std::size_t>(planes));
  for (int k = 0; k < planes; ++k) out[k] = a * (k - k0) * (k - k0) + c;
  return out;
}

}  // namespace smap::oracle
