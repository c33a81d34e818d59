#pragma once

// Geometry primitives shared by every stage: rasters, pinhole intrinsics,
// rigid poses, projection and plane-sweep warping.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "smap/error.hpp"

namespace smap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Row-major H x W grid. Pixel (x, y) is column x, row y.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(checked(width)), height_(checked(height)),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> row(int y) noexcept { return {data_.data() + index(0, y), std::size_t(width_)}; }
  std::span<const T> row(int y) const noexcept {
    return {data_.data() + index(0, y), std::size_t(width_)};
  }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  static int checked(int n) {
    if (n < 0) throw Error(Errc::InvalidArgument, "negative raster size");
    return n;
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Grayscale intensities in [0, 1].
using Image = Raster<float>;

inline bool image_is_valid(const Image& image) {
  for (float v : image.data())
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) return false;
  return true;
}

/// Bilinear lookup; the caller guarantees 0 <= u <= w-1 and 0 <= v <= h-1.
inline double sample_bilinear(const Image& image, double u, double v) noexcept {
  int x0 = static_cast<int>(u);
  int y0 = static_cast<int>(v);
  if (x0 >= image.width() - 1) x0 = image.width() - 2;
  if (y0 >= image.height() - 1) y0 = image.height() - 2;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  const double ax = u - x0;
  const double ay = v - y0;
  const double top = (1.0 - ax) * image(x0, y0) + ax * image(x0 + 1, y0);
  const double bottom = (1.0 - ax) * image(x0, y0 + 1) + ax * image(x0 + 1, y0 + 1);
  return (1.0 - ay) * top + ay * bottom;
}

/// Per-pixel depth (camera z, metres) with a validity mask. Invalid pixels
/// store 0. Every valid depth is finite and strictly positive.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height) : depth_(width, height, 0.0), valid_(width, height, 0) {}

  int width() const noexcept { return depth_.width(); }
  int height() const noexcept { return depth_.height(); }
  bool contains(int x, int y) const noexcept { return depth_.contains(x, y); }

  bool valid(int x, int y) const noexcept { return valid_(x, y) != 0; }
  double depth(int x, int y) const noexcept { return depth_(x, y); }

  /// Stores `d` if it is finite and positive, otherwise marks the pixel invalid.
  void set(int x, int y, double d) noexcept {
    if (std::isfinite(d) && d > 0.0) {
      depth_(x, y) = d;
      valid_(x, y) = 1;
    } else {
      invalidate(x, y);
    }
  }
  void invalidate(int x, int y) noexcept {
    depth_(x, y) = 0.0;
    valid_(x, y) = 0;
  }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto v : valid_.data()) n += v;
    return n;
  }

  const Raster<double>& depths() const noexcept { return depth_; }
  const Raster<std::uint8_t>& mask() const noexcept { return valid_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept { return depth_.same_shape(other); }
  bool same_shape(const DepthMap& other) const noexcept { return depth_.same_shape(other.depth_); }

  bool operator==(const DepthMap&) const = default;

 private:
  Raster<double> depth_;
  Raster<std::uint8_t> valid_;
};

/// The sparse variant shares the raster layout; all non-sample pixels are zero.
using SparseDepthMap = DepthMap;

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0) || !(cx > 0.0) || !(cy > 0.0) || !(cx < width) ||
        !(cy < height))
      throw Error(Errc::InvalidIntrinsics, "require fx, fy > 0, 0 < cx < width, 0 < cy < height");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }
  Mat3 inverse_matrix() const {
    Mat3 k;
    k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
    return k;
  }

  bool in_bounds(const Vec2& px) const noexcept {
    return px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= width - 1 && px.y() <= height - 1;
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// SE(3) transform. Keyframe poses are world-from-camera.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  /// Quaternion order as in trajectory files: (qx, qy, qz, qw).
  static RigidPose from_quaternion(double qx, double qy, double qz, double qw, const Vec3& t) {
    Eigen::Quaterniond q(qw, qx, qy, qz);
    if (!(q.norm() > 1e-12)) throw Error(Errc::InvalidRotation, "zero-norm quaternion");
    q.normalize();
    return {q.toRotationMatrix(), t};
  }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation); }

  bool is_valid(double tol = 1e-9) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }

  void validate() const {
    if (!is_valid()) throw Error(Errc::InvalidRotation, "rotation is not orthonormal with det 1");
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  RigidPose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  RigidPose operator*(const RigidPose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
};

struct Projection {
  Vec2 pixel;
  double depth = 0.0;
};

inline Projection project(const Vec3& point_cam, const CameraIntrinsics& intr) {
  const double z = point_cam.z();
  if (!(z > 1e-6)) throw Error(Errc::BehindCamera, "point has z <= 1e-6");
  return {Vec2(intr.fx * point_cam.x() / z + intr.cx, intr.fy * point_cam.y() / z + intr.cy), z};
}

inline Vec3 unproject(const Vec2& pixel, double depth, const CameraIntrinsics& intr) {
  if (!(depth > 0.0) || !std::isfinite(depth))
    throw Error(Errc::NonPositiveDepth, "depth must be finite and > 0");
  return {(pixel.x() - intr.cx) / intr.fx * depth, (pixel.y() - intr.cy) / intr.fy * depth, depth};
}

/// Transform taking points in the `ref` camera frame to the `src` camera frame.
inline RigidPose relative_pose(const RigidPose& ref, const RigidPose& src) {
  ref.validate();
  src.validate();
  const Mat3 src_rt = src.rotation.transpose();
  return {src_rt * ref.rotation, src_rt * (ref.translation - src.translation)};
}

/// Plane-sweep correspondence: the reference pixel lifted onto the
/// fronto-parallel plane at `hypothesis_depth`, seen from the source camera.
/// Returns nullopt when the point is behind the source or off its image.
inline std::optional<Vec2> warp_pixel(const Vec2& pixel, double hypothesis_depth,
                                      const CameraIntrinsics& ref_intr, const RigidPose& rel,
                                      const CameraIntrinsics& src_intr) {
  const Vec3 p_src = rel.apply(unproject(pixel, hypothesis_depth, ref_intr));
  if (!(p_src.z() > 1e-6)) return std::nullopt;
  const Vec2 px(src_intr.fx * p_src.x() / p_src.z() + src_intr.cx,
                src_intr.fy * p_src.y() / p_src.z() + src_intr.cy);
  if (!src_intr.in_bounds(px)) return std::nullopt;
  return px;
}

inline std::optional<Vec2> warp_pixel(const Vec2& pixel, double hypothesis_depth,
                                      const CameraIntrinsics& intr, const RigidPose& rel) {
  return warp_pixel(pixel, hypothesis_depth, intr, rel, intr);
}

/// Camera looking from `eye` toward `target`; camera axes x right, y down, z forward.
inline RigidPose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ()) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3::UnitY());
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return {r, eye};
}

}  // namespace smap
