#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "smap/smap.hpp"

namespace smap::test {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("smap_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline CameraIntrinsics intrinsics_500() { return {500.0, 500.0, 320.0, 240.0, 640, 480}; }

inline RigidPose translation(double x, double y, double z) { return {Mat3::Identity(), Vec3(x, y, z)}; }

inline Mat3 rot_z(double rad) { return Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix(); }

inline RigidPose random_pose(std::mt19937_64& rng, double max_t = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-max_t, max_t);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return {q.toRotationMatrix(), Vec3(u(rng), u(rng), u(rng))};
}

/// Camera at `eye` looking along world +y with x to the right and z up, so a
/// wall at constant y is fronto-parallel.
inline RigidPose facing_plus_y(const Vec3& eye) { return look_at(eye, eye + Vec3::UnitY()); }

/// Error code thrown by `fn`; records a failure when nothing is thrown.
inline Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no smap::Error thrown";
  return Errc::InvalidArgument;
}

/// Constant-depth map.
inline DepthMap constant_depth(int w, int h, double d) {
  DepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, d);
  return m;
}

}  // namespace smap::test
