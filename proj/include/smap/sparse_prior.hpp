#pragma once

// Sparse depth from landmarks, VIO-like noise simulation on ground truth,
// classical densification (min/max pooling ladder + edge-aware smoothing)
// and the reconstruction/smoothness quality objectives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "smap/core.hpp"

namespace smap {

struct Observation {
  std::int64_t keyframe_id = 0;
  Vec2 pixel = Vec2::Zero();
};

struct Landmark {
  std::int64_t id = 0;
  Vec3 position = Vec3::Zero();  // world frame
  std::vector<Observation> observations;
};

struct LandmarkFilterConfig {
  double d_th = 5.0;  // metres
  double r_th = 2.0;  // pixels

  void validate() const {
    if (!(d_th > 0.0) || !(r_th > 0.0))
      throw Error(Errc::ConfigError, "landmark_filter thresholds must be > 0");
  }
};

struct NoiseConfig {
  double sigma_f = 0.1;     // focal length, pixels
  double sigma_c = 0.1;     // principal point, pixels
  double sigma_R = 0.01;    // rotation, degrees
  double sigma_t = 0.005;   // translation, metres
  double sigma_d = 0.45;    // depth at the 5 m reference range, metres
  double sigma_uv = 3.0;    // pixel coordinates, pixels
  int point_count = 250;
  std::uint64_t seed = 0;

  /// Depth noise is sigma_d * depth / depth_reference.
  static constexpr double depth_reference = 5.0;

  static NoiseConfig zero() {
    NoiseConfig cfg;
    cfg.sigma_f = cfg.sigma_c = cfg.sigma_R = cfg.sigma_t = cfg.sigma_d = cfg.sigma_uv = 0.0;
    return cfg;
  }

  void validate() const {
    for (double s : {sigma_f, sigma_c, sigma_R, sigma_t, sigma_d, sigma_uv})
      if (!(s >= 0.0)) throw Error(Errc::ConfigError, "noise sigmas must be >= 0");
    if (point_count < 0) throw Error(Errc::ConfigError, "noise.point_count must be >= 0");
  }
};

enum class DensifyFallback { nearest_valid, global_median };

struct DensifierConfig {
  std::vector<int> kernels{3, 5, 9, 17};
  int smoothing_passes = 2;
  DensifyFallback fallback = DensifyFallback::nearest_valid;

  void validate() const {
    for (int k : kernels)
      if (k < 3 || k % 2 == 0) throw Error(Errc::ConfigError, "densifier kernels must be odd and >= 3");
    if (smoothing_passes < 0) throw Error(Errc::ConfigError, "densifier.smoothing_passes must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Landmark projection

inline int round_pixel(double v) { return static_cast<int>(std::floor(v + 0.5)); }

/// Mean reprojection error over observations whose keyframe pose is known.
/// Returns 0 when no observation can be checked.
inline double mean_reprojection_error(const Landmark& lm, const CameraIntrinsics& intr,
                                      const std::map<std::int64_t, RigidPose>& keyframe_poses) {
  double sum = 0.0;
  int n = 0;
  for (const auto& obs : lm.observations) {
    auto it = keyframe_poses.find(obs.keyframe_id);
    if (it == keyframe_poses.end()) continue;
    const Vec3 pc = it->second.inverse().apply(lm.position);
    if (!(pc.z() > 1e-6)) return std::numeric_limits<double>::infinity();
    sum += (project(pc, intr).pixel - obs.pixel).norm();
    ++n;
  }
  return n ? sum / n : 0.0;
}

/// Projects world landmarks into the reference camera. A landmark is dropped
/// when it lies behind the camera, beyond d_th, outside the image, or when its
/// mean reprojection error over `keyframe_poses` exceeds r_th. Collisions keep
/// the nearer depth.
inline SparseDepthMap project_landmarks(std::span<const Landmark> landmarks, const RigidPose& ref_pose,
                                        const CameraIntrinsics& intr, const LandmarkFilterConfig& cfg,
                                        const std::map<std::int64_t, RigidPose>& keyframe_poses = {}) {
  ref_pose.validate();
  cfg.validate();
  SparseDepthMap out(intr.width, intr.height);
  const RigidPose cam_from_world = ref_pose.inverse();
  for (const auto& lm : landmarks) {
    if (!lm.position.allFinite()) continue;
    const Vec3 pc = cam_from_world.apply(lm.position);
    const double z = pc.z();
    if (!(z > 1e-6) || z > cfg.d_th) continue;
    const Vec2 px = project(pc, intr).pixel;
    const int x = round_pixel(px.x());
    const int y = round_pixel(px.y());
    if (!out.contains(x, y)) continue;
    if (mean_reprojection_error(lm, intr, keyframe_poses) > cfg.r_th) continue;
    if (!out.valid(x, y) || z < out.depth(x, y)) out.set(x, y, z);
  }
  return out;
}

/// Drops sparse entries deeper than d_th.
inline SparseDepthMap filter_sparse_depth(SparseDepthMap sparse, double d_th) {
  for (int y = 0; y < sparse.height(); ++y)
    for (int x = 0; x < sparse.width(); ++x)
      if (sparse.valid(x, y) && sparse.depth(x, y) > d_th) sparse.invalidate(x, y);
  return sparse;
}

// ---------------------------------------------------------------------------
// Corner scoring

/// Shi-Tomasi response (smaller eigenvalue of the 3x3-summed structure tensor
/// of Sobel gradients). Pixels within 2 of the border score 0.
inline Raster<float> corner_response(const Image& image) {
  const int w = image.width();
  const int h = image.height();
  Raster<double> gxx(w, h, 0.0), gyy(w, h, 0.0), gxy(w, h, 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = (image(x + 1, y - 1) + 2.0 * image(x + 1, y) + image(x + 1, y + 1) -
                         image(x - 1, y - 1) - 2.0 * image(x - 1, y) - image(x - 1, y + 1)) / 8.0;
      const double gy = (image(x - 1, y + 1) + 2.0 * image(x, y + 1) + image(x + 1, y + 1) -
                         image(x - 1, y - 1) - 2.0 * image(x, y - 1) - image(x + 1, y - 1)) / 8.0;
      gxx(x, y) = gx * gx;
      gyy(x, y) = gy * gy;
      gxy(x, y) = gx * gy;
    }
  }
  Raster<float> out(w, h, 0.0f);
  for (int y = 2; y + 2 < h; ++y) {
    for (int x = 2; x + 2 < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          a += gxx(x + dx, y + dy);
          b += gxy(x + dx, y + dy);
          c += gyy(x + dx, y + dy);
        }
      const double half_trace = 0.5 * (a + c);
      const double disc = std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
      out(x, y) = static_cast<float>(half_trace - disc);
    }
  }
  return out;
}

struct Keypoint {
  int x = 0;
  int y = 0;
  float score = 0.0f;
};

/// Local maxima of the corner response in a 5x5 neighbourhood, strongest first
/// (ties by row then column).
inline std::vector<Keypoint> detect_keypoints(const Image& image, float min_response = 1e-7f) {
  const Raster<float> resp = corner_response(image);
  std::vector<Keypoint> kps;
  for (int y = 2; y + 2 < resp.height(); ++y) {
    for (int x = 2; x + 2 < resp.width(); ++x) {
      const float s = resp(x, y);
      if (!(s > min_response)) continue;
      bool is_max = true;
      for (int dy = -2; dy <= 2 && is_max; ++dy)
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const float n = resp(x + dx, y + dy);
          // Strict against earlier raster positions, non-strict against later ones.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > s || (earlier && n == s)) {
            is_max = false;
            break;
          }
        }
      if (is_max) kps.push_back({x, y, s});
    }
  }
  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return kps;
}

// ---------------------------------------------------------------------------
// Noise simulation

/// Calibration and pose error shared by every point of one simulated frame.
struct FramePerturbation {
  double dfx = 0, dfy = 0, dcx = 0, dcy = 0;
  Vec3 rotation_deg = Vec3::Zero();  // axis-angle components, degrees
  Vec3 translation = Vec3::Zero();   // world frame, metres
};

/// Triangulation error of one point.
struct PointPerturbation {
  double du = 0, dv = 0, dd = 0;
};

/// Draws are always consumed from the generator, so the stream position does
/// not depend on which sigmas are zero.
class NoiseSampler {
 public:
  explicit NoiseSampler(const NoiseConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  FramePerturbation frame() {
    FramePerturbation p;
    p.dfx = cfg_.sigma_f * normal();
    p.dfy = cfg_.sigma_f * normal();
    p.dcx = cfg_.sigma_c * normal();
    p.dcy = cfg_.sigma_c * normal();
    for (int i = 0; i < 3; ++i) p.rotation_deg[i] = cfg_.sigma_R * normal();
    for (int i = 0; i < 3; ++i) p.translation[i] = cfg_.sigma_t * normal();
    return p;
  }

  PointPerturbation point(double depth) {
    PointPerturbation p;
    p.du = cfg_.sigma_uv * normal();
    p.dv = cfg_.sigma_uv * normal();
    p.dd = cfg_.sigma_d * (depth / NoiseConfig::depth_reference) * normal();
    return p;
  }

 private:
  double normal() { return dist_(rng_); }

  NoiseConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

inline Mat3 rotation_from_degrees(const Vec3& rot_deg) {
  const Vec3 rad = rot_deg * (M_PI / 180.0);
  const double angle = rad.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, rad / angle).toRotationMatrix();
}

/// Samples the `point_count` strongest corners that have ground-truth depth and
/// perturbs them with the configured calibration, pose, pixel and depth noise.
/// A draw that lands off-image, on an occupied pixel or at non-positive depth is
/// redrawn (up to 16 times) before the point is dropped.
inline SparseDepthMap simulate_noisy_sparse(const DepthMap& gt_depth, const Image& image,
                                            const NoiseConfig& cfg, const CameraIntrinsics& intr,
                                            const RigidPose& pose) {
  cfg.validate();
  pose.validate();
  if (!gt_depth.same_shape(image))
    throw Error(Errc::InvalidArgument, "ground-truth depth and image dimensions differ");

  std::vector<Keypoint> chosen;
  for (const auto& kp : detect_keypoints(image)) {
    if (static_cast<int>(chosen.size()) >= cfg.point_count) break;
    if (gt_depth.valid(kp.x, kp.y)) chosen.push_back(kp);
  }
  if (chosen.empty() && cfg.point_count > 0)
    throw Error(Errc::NoValidKeypoints, "no corner has valid ground-truth depth");

  NoiseSampler sampler(cfg);
  const FramePerturbation fp = sampler.frame();
  const Mat3 delta_r_t = rotation_from_degrees(fp.rotation_deg).transpose();
  const Vec3 delta_t_cam = pose.rotation.transpose() * fp.translation;
  CameraIntrinsics noisy = intr;
  noisy.fx += fp.dfx;
  noisy.fy += fp.dfy;
  noisy.cx += fp.dcx;
  noisy.cy += fp.dcy;

  SparseDepthMap out(gt_depth.width(), gt_depth.height());
  constexpr int kMaxAttempts = 16;
  for (const auto& kp : chosen) {
    const double d = gt_depth.depth(kp.x, kp.y);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      const PointPerturbation pp = sampler.point(d);
      const double depth = d + pp.dd;
      if (!(depth > 0.0)) continue;
      const Vec3 pc = unproject(Vec2(kp.x + pp.du, kp.y + pp.dv), depth, intr);
      // Same point seen through the perturbed camera; with zero noise every
      // operation below is exact and the depth is reproduced bit for bit.
      const Vec3 pn = delta_r_t * (pc - delta_t_cam);
      if (!(pn.z() > 1e-6)) continue;
      const int u = round_pixel(noisy.fx * pn.x() / pn.z() + noisy.cx);
      const int v = round_pixel(noisy.fy * pn.y() / pn.z() + noisy.cy);
      if (!out.contains(u, v) || out.valid(u, v)) continue;
      out.set(u, v, pn.z());
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Densification

namespace detail {

/// Separable sliding min and max over a (2r+1)^2 window, ignoring empty cells.
inline void window_min_max(const Raster<double>& value, const Raster<std::uint8_t>& filled, int r,
                           Raster<double>& out_min, Raster<double>& out_max) {
  const int w = value.width();
  const int h = value.height();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Raster<double> hmin(w, h, inf), hmax(w, h, -inf);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double lo = inf, hi = -inf;
      for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) {
        if (!filled(dx, y)) continue;
        lo = std::min(lo, value(dx, y));
        hi = std::max(hi, value(dx, y));
      }
      hmin(x, y) = lo;
      hmax(x, y) = hi;
    }
  out_min = Raster<double>(w, h, inf);
  out_max = Raster<double>(w, h, -inf);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double lo = inf, hi = -inf;
      for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) {
        lo = std::min(lo, hmin(x, dy));
        hi = std::max(hi, hmax(x, dy));
      }
      out_min(x, y) = lo;
      out_max(x, y) = hi;
    }
}

}  // namespace detail

/// Dense prior from sparse depth. Empty pixels are filled level by level with
/// the min/max-pool midpoint of their filled neighbourhood; whatever the ladder
/// misses comes from the fallback. Smoothing then averages each non-sample
/// pixel with its 4-neighbours weighted by exp(-|image gradient|). Sample
/// pixels keep their input depth.
inline DepthMap densify(const SparseDepthMap& sparse, const Image& image, const DensifierConfig& cfg) {
  cfg.validate();
  if (!sparse.same_shape(image)) throw Error(Errc::InvalidArgument, "sparse depth and image dimensions differ");
  if (sparse.valid_count() == 0) throw Error(Errc::EmptyPrior, "sparse depth has no valid entries");

  const int w = sparse.width();
  const int h = sparse.height();
  Raster<double> depth = sparse.depths();
  Raster<std::uint8_t> filled = sparse.mask();
  const Raster<std::uint8_t>& anchor = sparse.mask();

  Raster<double> lo, hi;
  for (int k : cfg.kernels) {
    detail::window_min_max(depth, filled, k / 2, lo, hi);
    Raster<std::uint8_t> next = filled;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (filled(x, y) || !std::isfinite(lo(x, y))) continue;
        depth(x, y) = 0.5 * (lo(x, y) + hi(x, y));
        next(x, y) = 1;
      }
    filled = std::move(next);
  }

  if (cfg.fallback == DensifyFallback::global_median) {
    std::vector<double> values;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (anchor(x, y)) values.push_back(sparse.depth(x, y));
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double median = *mid;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (!filled(x, y)) {
          depth(x, y) = median;
          filled(x, y) = 1;
        }
  } else {
    // Breadth-first propagation from filled pixels (8-connected).
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (filled(x, y)) queue.emplace_back(x, y);
    while (!queue.empty()) {
      const auto [x, y] = queue.front();
      queue.pop_front();
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (!filled.contains(nx, ny) || filled(nx, ny)) continue;
          depth(nx, ny) = depth(x, y);
          filled(nx, ny) = 1;
          queue.emplace_back(nx, ny);
        }
    }
  }

  for (int pass = 0; pass < cfg.smoothing_passes; ++pass) {
    Raster<double> next = depth;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (anchor(x, y)) continue;
        double sum = depth(x, y);
        double weight = 1.0;
        auto add = [&](int nx, int ny) {
          if (!depth.contains(nx, ny)) return;
          const double wgt = std::exp(-std::abs(double(image(nx, ny)) - double(image(x, y))));
          sum += wgt * depth(nx, ny);
          weight += wgt;
        };
        add(x - 1, y);
        add(x + 1, y);
        add(x, y - 1);
        add(x, y + 1);
        next(x, y) = sum / weight;
      }
    depth = std::move(next);
  }

  DepthMap out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.set(x, y, depth(x, y));
  return out;
}

// ---------------------------------------------------------------------------
// Quality objectives

/// Mean absolute error over pixels valid in both maps.
inline double reconstruction_loss(const DepthMap& pred, const DepthMap& gt) {
  if (!pred.same_shape(gt)) throw Error(Errc::InvalidArgument, "depth map dimensions differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < gt.height(); ++y)
    for (int x = 0; x < gt.width(); ++x) {
      if (!gt.valid(x, y) || !pred.valid(x, y)) continue;
      sum += std::abs(pred.depth(x, y) - gt.depth(x, y));
      ++n;
    }
  if (n == 0) throw Error(Errc::NoOverlap, "no pixel is valid in both maps");
  return sum / static_cast<double>(n);
}

/// Edge-aware L1 smoothness with forward differences, averaged over every
/// pixel that has a right and a lower neighbour with valid depth.
inline double smoothness_loss(const DepthMap& pred, const Image& image) {
  if (!pred.same_shape(image)) throw Error(Errc::InvalidArgument, "depth and image dimensions differ");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y + 1 < pred.height(); ++y)
    for (int x = 0; x + 1 < pred.width(); ++x) {
      if (!pred.valid(x, y) || !pred.valid(x + 1, y) || !pred.valid(x, y + 1)) continue;
      const double lambda_u = std::exp(-std::abs(double(image(x + 1, y)) - double(image(x, y))));
      const double lambda_v = std::exp(-std::abs(double(image(x, y + 1)) - double(image(x, y))));
      sum += lambda_u * std::abs(pred.depth(x + 1, y) - pred.depth(x, y)) +
             lambda_v * std::abs(pred.depth(x, y + 1) - pred.depth(x, y));
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline double combined_loss(const DepthMap& pred, const DepthMap& gt, const Image& image,
                            double w_rec = 1.0, double w_sm = 1.0) {
  return w_rec * reconstruction_loss(pred, gt) + w_sm * smoothness_loss(pred, image);
}

}  // namespace smap
