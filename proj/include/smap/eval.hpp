#pragma once

// Dense-depth error metrics, mesh sampling, point-set accuracy/completeness
// metrics and rigid alignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SVD>
#include <json.hpp>

#include "smap/core.hpp"
#include "smap/kdtree.hpp"
#include "smap/mesh.hpp"

namespace smap {

struct DepthMetrics {
  double abs_diff = 0.0;   // m
  double sq_rel = 0.0;
  double rmse = 0.0;       // m
  double delta_105 = 0.0;  // %
  double delta_125 = 0.0;  // %
  std::size_t count = 0;   // evaluated pixels
};

/// Errors over pixels valid in both maps (and with gt <= max_depth when set).
inline DepthMetrics depth_metrics(const DepthMap& pred, const DepthMap& gt,
                                  std::optional<double> max_depth = std::nullopt) {
  if (!pred.same_shape(gt)) throw Error(Errc::InvalidArgument, "depth map dimensions differ");
  double abs_sum = 0, sq_rel_sum = 0, sq_sum = 0;
  std::size_t n = 0, within_105 = 0, within_125 = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.valid(x, y) || !pred.valid(x, y)) continue;
      const double g = gt.depth(x, y), p = pred.depth(x, y);
      if (max_depth && g > *max_depth) continue;
      const double diff = p - g;
      abs_sum += std::abs(diff);
      sq_rel_sum += diff * diff / g;
      sq_sum += diff * diff;
      const double ratio = std::max(p / g, g / p);
      within_105 += ratio < 1.05;
      within_125 += ratio < 1.25;
      ++n;
    }
  if (n == 0) throw Error(Errc::NoOverlap, "no pixel is valid in both depth maps");
  const double dn = static_cast<double>(n);
  return {abs_sum / dn, sq_rel_sum / dn, std::sqrt(sq_sum / dn), 100.0 * within_105 / dn,
          100.0 * within_125 / dn, n};
}

// ---------------------------------------------------------------------------

struct SurfaceSample {
  Vec3 point;
  std::size_t triangle = 0;
};

/// Area-weighted uniform samples on the mesh surface.
inline std::vector<SurfaceSample> sample_mesh_with_faces(const TriangleMesh& mesh, std::size_t count,
                                                         std::uint64_t seed) {
  if (mesh.triangles.empty()) throw Error(Errc::EmptyMesh, "mesh has no triangles");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3 a = mesh.vertices[t[0]].cast<double>();
    const Vec3 b = mesh.vertices[t[1]].cast<double>();
    const Vec3 c = mesh.vertices[t[2]].cast<double>();
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error(Errc::EmptyMesh, "mesh has zero surface area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SurfaceSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double pick = unit(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto tri = static_cast<std::size_t>(it - cumulative.begin());
    const auto& t = mesh.triangles[tri];
    const double r = std::sqrt(unit(rng)), v = unit(rng);
    const double wa = 1.0 - r, wb = r * (1.0 - v), wc = r * v;
    out.push_back({wa * mesh.vertices[t[0]].cast<double>() + wb * mesh.vertices[t[1]].cast<double>() +
                       wc * mesh.vertices[t[2]].cast<double>(),
                   tri});
  }
  return out;
}

inline std::vector<Vec3> sample_mesh(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<Vec3> pts;
  pts.reserve(count);
  for (const auto& s : sample_mesh_with_faces(mesh, count, seed)) pts.push_back(s.point);
  return pts;
}

// ---------------------------------------------------------------------------

struct MeshMetrics {
  double accuracy = 0.0;      // cm
  double completeness = 0.0;  // cm
  double chamfer = 0.0;       // cm
  double precision = 0.0;     // %
  double recall = 0.0;        // %
  double f_score = 0.0;       // %
  double threshold = 5.0;     // cm
};

/// Nearest-neighbour distance (metres) from every query point to `index`.
inline std::vector<double> nearest_distances(std::span<const Vec3> queries, const KdTree& index) {
  std::vector<double> out(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = std::sqrt(index.nearest(queries[i]).squared_distance);
  return out;
}

namespace detail {

inline MeshMetrics mesh_metrics_from_distances(std::span<const double> pred_to_gt, std::span<const double> gt_to_pred,
                                               double threshold_cm) {
  const double thr = threshold_cm / 100.0;
  MeshMetrics m;
  m.threshold = threshold_cm;
  double acc = 0.0, comp = 0.0;
  std::size_t prec = 0, rec = 0;
  for (double d : pred_to_gt) {
    acc += d;
    prec += d < thr;
  }
  for (double d : gt_to_pred) {
    comp += d;
    rec += d < thr;
  }
  m.accuracy = 100.0 * acc / pred_to_gt.size();
  m.completeness = 100.0 * comp / gt_to_pred.size();
  m.chamfer = 0.5 * (m.accuracy + m.completeness);
  m.precision = 100.0 * prec / pred_to_gt.size();
  m.recall = 100.0 * rec / gt_to_pred.size();
  m.f_score = (m.precision > 0.0 && m.recall > 0.0) ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace detail

/// Accuracy (pred -> gt) and completeness (gt -> pred) in cm; precision and
/// recall count distances strictly below the threshold.
inline MeshMetrics mesh_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold_cm = 5.0) {
  if (pred.empty() || gt.empty()) throw Error(Errc::EmptySet, "mesh metrics need non-empty point sets");
  const KdTree gt_index(std::vector<Vec3>(gt.begin(), gt.end()));
  const KdTree pred_index(std::vector<Vec3>(pred.begin(), pred.end()));
  const auto a = nearest_distances(pred, gt_index);
  const auto c = nearest_distances(gt, pred_index);
  return detail::mesh_metrics_from_distances(a, c, threshold_cm);
}

// ---------------------------------------------------------------------------

/// Keeps points seen by at least one camera: in front, within max_depth and
/// projecting inside the image.
inline std::vector<Vec3> prune_to_frusta(std::span<const Vec3> points, std::span<const RigidPose> poses,
                                         const CameraIntrinsics& intr, double max_depth) {
  std::vector<RigidPose> cam_from_world;
  cam_from_world.reserve(poses.size());
  for (const auto& p : poses) cam_from_world.push_back(p.inverse());
  std::vector<Vec3> kept;
  for (const auto& pw : points) {
    for (const auto& cw : cam_from_world) {
      const Vec3 pc = cw.apply(pw);
      if (!(pc.z() > 1e-6) || pc.z() > max_depth) continue;
      const Vec2 px(intr.fx * pc.x() / pc.z() + intr.cx, intr.fy * pc.y() / pc.z() + intr.cy);
      if (px.x() < -0.5 || px.y() < -0.5 || px.x() > intr.width - 0.5 || px.y() > intr.height - 0.5) continue;
      kept.push_back(pw);
      break;
    }
  }
  return kept;
}

// ---------------------------------------------------------------------------

/// Least-squares rigid transform T with T * pred[i] ~ gt[j] over the given
/// (i, j) correspondences (closed form via SVD of the cross-covariance).
inline RigidPose align_se3(std::span<const Vec3> pred, std::span<const Vec3> gt,
                           std::span<const std::pair<std::size_t, std::size_t>> correspondences) {
  if (correspondences.size() < 3)
    throw Error(Errc::DegenerateConfiguration, "need at least 3 correspondences");
  Vec3 mp = Vec3::Zero(), mg = Vec3::Zero();
  for (const auto& [i, j] : correspondences) {
    if (i >= pred.size() || j >= gt.size()) throw Error(Errc::InvalidArgument, "correspondence index out of range");
    mp += pred[i];
    mg += gt[j];
  }
  const double n = static_cast<double>(correspondences.size());
  mp /= n;
  mg /= n;
  Mat3 cross = Mat3::Zero(), spread = Mat3::Zero();
  for (const auto& [i, j] : correspondences) {
    const Vec3 p = pred[i] - mp, g = gt[j] - mg;
    cross += p * g.transpose();
    spread += p * p.transpose();
  }
  const Eigen::JacobiSVD<Mat3> spread_svd(spread);
  const Vec3 sv = spread_svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0])
    throw Error(Errc::DegenerateConfiguration, "points are collinear or coincident");

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidPose out;
  out.rotation = v * fix * u.transpose();
  out.translation = mg - out.rotation * mp;
  return out;
}

/// Index-aligned variant: pred[i] corresponds to gt[i].
inline RigidPose align_se3(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size()) throw Error(Errc::InvalidArgument, "point sets differ in size");
  std::vector<std::pair<std::size_t, std::size_t>> corr(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) corr[i] = {i, i};
  return align_se3(pred, gt, corr);
}

inline double alignment_rmse(std::span<const Vec3> pred, std::span<const Vec3> gt, const RigidPose& t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += (t.apply(pred[i]) - gt[i]).squaredNorm();
  return pred.empty() ? 0.0 : std::sqrt(sum / pred.size());
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const DepthMetrics& m) {
  j = {{"abs_diff", m.abs_diff}, {"sq_rel", m.sq_rel}, {"rmse", m.rmse},
       {"delta_105", m.delta_105}, {"delta_125", m.delta_125}};
}

inline void from_json(const nlohmann::json& j, DepthMetrics& m) {
  j.at("abs_diff").get_to(m.abs_diff);
  j.at("sq_rel").get_to(m.sq_rel);
  j.at("rmse").get_to(m.rmse);
  j.at("delta_105").get_to(m.delta_105);
  j.at("delta_125").get_to(m.delta_125);
}

inline void to_json(nlohmann::json& j, const MeshMetrics& m) {
  j = {{"accuracy", m.accuracy}, {"completeness", m.completeness}, {"chamfer", m.chamfer},
       {"precision", m.precision}, {"recall", m.recall}, {"f_score", m.f_score},
       {"threshold", m.threshold}};
}

inline void from_json(const nlohmann::json& j, MeshMetrics& m) {
  j.at("accuracy").get_to(m.accuracy);
  j.at("completeness").get_to(m.completeness);
  j.at("chamfer").get_to(m.chamfer);
  j.at("precision").get_to(m.precision);
  j.at("recall").get_to(m.recall);
  j.at("f_score").get_to(m.f_score);
  j.at("threshold").get_to(m.threshold);
}

}  // namespace smap
