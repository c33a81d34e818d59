#pragma once

// Analytic test scenes: textured planes, axis-aligned boxes and spheres,
// rendered by exact ray casting into intensity and depth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "smap/core.hpp"
#include "smap/sparse_prior.hpp"

namespace smap::synth {

/// Texture ids: 0 uniform grey, 1 white noise on a 1 cm lattice, >= 2
/// band-limited sums of sinusoids (wavelengths 4-40 cm) seeded by the id.
inline constexpr int kTextureUniform = 0;
inline constexpr int kTextureNoise = 1;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double unit_hash(std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(splitmix64(splitmix64(a) ^ (b * 0xD6E8FEB86659FD93ull)) >> 11) * 0x1.0p-53;
}

struct Wave {
  Vec3 k;
  double phase;
  double amplitude;
};

inline std::vector<Wave> waves_for(int id) {
  constexpr int kWaves = 8;
  std::vector<Wave> waves;
  for (int i = 0; i < kWaves; ++i) {
    const auto base = static_cast<std::uint64_t>(id) * 64 + static_cast<std::uint64_t>(i) * 4;
    const double zc = 2.0 * unit_hash(base, 1) - 1.0;
    const double az = 2.0 * M_PI * unit_hash(base, 2);
    const double rho = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const Vec3 dir(rho * std::cos(az), rho * std::sin(az), zc);
    // Log-spaced wavelengths between 4 cm and 40 cm, jittered.
    const double t = (i + unit_hash(base, 3)) / kWaves;
    const double wavelength = 0.04 * std::pow(10.0, t);
    waves.push_back({dir * (2.0 * M_PI / wavelength), 2.0 * M_PI * unit_hash(base, 4), 1.0});
  }
  return waves;
}

}  // namespace detail

inline float texture_value(int id, const Vec3& p) {
  if (id == kTextureUniform) return 0.5f;
  if (id == kTextureNoise) {
    const auto q = (p / 0.01).array().floor();
    const auto key = static_cast<std::uint64_t>(static_cast<std::int64_t>(q.x()) * 73856093 ^
                                                static_cast<std::int64_t>(q.y()) * 19349663 ^
                                                static_cast<std::int64_t>(q.z()) * 83492791);
    return static_cast<float>(0.1 + 0.8 * detail::unit_hash(key, 7));
  }
  thread_local int cached_id = -1;
  thread_local std::vector<detail::Wave> waves;
  if (cached_id != id) {
    waves = detail::waves_for(id);
    cached_id = id;
  }
  double sum = 0.0, norm = 0.0;
  for (const auto& w : waves) {
    sum += w.amplitude * std::sin(w.k.dot(p) + w.phase);
    norm += w.amplitude;
  }
  // Eight unit sinusoids rarely align; scale so typical values span ~[0.1, 0.9].
  return static_cast<float>(std::clamp(0.5 + 0.4 * sum / std::sqrt(norm * 2.0), 0.0, 1.0));
}

struct Plane {
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  Vec3 u_axis = Vec3::UnitX();
  Eigen::Vector2d half_extent{0.0, 0.0};  // <= 0 means unbounded
  int texture = 2;
};

struct Box {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Ones();
  int texture = 2;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  int texture = 2;
};

using Primitive = std::variant<Plane, Box, Sphere>;

struct Bounds {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  Vec3 centroid() const { return 0.5 * (min + max); }
};

struct Scene {
  std::vector<Primitive> primitives;
  Bounds bounds;
  double orbit_radius = 2.0;  // camera stand-off used by orbit_trajectory
};

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int texture = 0;
};

// Ray o + t * d, t > 0. With d = R * (x', y', 1), t is the camera-frame depth.

inline std::optional<double> intersect(const Plane& pl, const Vec3& o, const Vec3& d) {
  const double denom = pl.normal.dot(d);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = pl.normal.dot(pl.center - o) / denom;
  if (!(t > 1e-9)) return std::nullopt;
  const Vec3 local = o + t * d - pl.center;
  if (pl.half_extent.x() > 0.0 && std::abs(local.dot(pl.u_axis)) > pl.half_extent.x()) return std::nullopt;
  const Vec3 v_axis = pl.normal.cross(pl.u_axis);
  if (pl.half_extent.y() > 0.0 && std::abs(local.dot(v_axis)) > pl.half_extent.y()) return std::nullopt;
  return t;
}

inline std::optional<double> intersect(const Sphere& s, const Vec3& o, const Vec3& d) {
  const Vec3 oc = o - s.center;
  const double a = d.squaredNorm();
  const double b = 2.0 * d.dot(oc);
  const double c = oc.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::nullopt;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double t0 = q / a, t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return std::nullopt;
}

inline std::optional<double> intersect(const Box& bx, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (o[i] < bx.min[i] || o[i] > bx.max[i]) return std::nullopt;
      continue;
    }
    double t0 = (bx.min[i] - o[i]) / d[i];
    double t1 = (bx.max[i] - o[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far) return std::nullopt;
  if (t_near > 1e-9) return t_near;
  if (t_far > 1e-9) return t_far;
  return std::nullopt;
}

inline Hit cast_ray(const Scene& scene, const Vec3& o, const Vec3& d) {
  Hit best;
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          if (auto t = intersect(p, o, d); t && *t < best.t) {
            best.t = *t;
            best.texture = p.texture;
          }
        },
        prim);
  }
  return best;
}

struct RenderedView {
  Image image;
  DepthMap depth;
};

/// Exact nearest-hit depth and textured intensity per pixel centre; pixels
/// that hit nothing are invalid with intensity 0.
inline RenderedView render(const Scene& scene, const RigidPose& pose, const CameraIntrinsics& intr) {
  pose.validate();
  RenderedView out{Image(intr.width, intr.height, 0.0f), DepthMap(intr.width, intr.height)};
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 d = pose.rotation * Vec3((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
      const Hit hit = cast_ray(scene, pose.translation, d);
      if (!std::isfinite(hit.t)) continue;
      out.depth.set(x, y, hit.t);
      out.image(x, y) = texture_value(hit.texture, pose.translation + hit.t * d);
    }
  return out;
}

struct TrajectoryPoint {
  double timestamp = 0.0;
  RigidPose pose;
};

using Trajectory = std::vector<TrajectoryPoint>;

/// Cameras on a horizontal circle of radius `scene.orbit_radius` around the
/// bounds centroid, each looking at the centroid, with consecutive camera
/// centres exactly `baseline` apart. Timestamps are 0.1 s apart.
inline Trajectory orbit_trajectory(const Scene& scene, int frame_count, double baseline) {
  if (frame_count < 2) throw Error(Errc::InvalidArgument, "orbit needs at least 2 frames");
  const double radius = scene.orbit_radius;
  if (!(baseline > 0.0) || !(radius > 0.0) || baseline > 2.0 * radius)
    throw Error(Errc::InvalidArgument, "orbit needs 0 < baseline <= 2 * orbit_radius");
  const Vec3 c = scene.bounds.centroid();
  const double step = 2.0 * std::asin(baseline / (2.0 * radius));
  Trajectory traj;
  for (int i = 0; i < frame_count; ++i) {
    const double theta = step * (i - 0.5 * (frame_count - 1));
    const Vec3 eye = c + radius * Vec3(std::sin(theta), -std::cos(theta), 0.0);
    traj.push_back({0.1 * i, look_at(eye, c)});
  }
  return traj;
}

/// True when world point `p` is the first surface hit from `pose`.
inline std::optional<Vec2> visible_pixel(const Scene& scene, const RigidPose& pose, const CameraIntrinsics& intr,
                                         const Vec3& p) {
  const Vec3 pc = pose.inverse().apply(p);
  if (!(pc.z() > 1e-6)) return std::nullopt;
  const Vec2 px(intr.fx * pc.x() / pc.z() + intr.cx, intr.fy * pc.y() / pc.z() + intr.cy);
  if (!intr.in_bounds(px)) return std::nullopt;
  const Vec3 d = pose.rotation * Vec3(pc.x() / pc.z(), pc.y() / pc.z(), 1.0);
  const Hit hit = cast_ray(scene, pose.translation, d);
  if (std::abs(hit.t - pc.z()) > 1e-6 * std::max(1.0, pc.z())) return std::nullopt;
  return px;
}

/// Surface points seen from at least two trajectory poses, with exact
/// (noise-free) observations in every pose that sees them.
inline std::vector<Landmark> scene_landmarks(const Scene& scene, const Trajectory& traj, const CameraIntrinsics& intr,
                                             int count, std::uint64_t seed = 0) {
  if (count < 1) throw Error(Errc::InvalidArgument, "landmark count must be >= 1");
  if (traj.empty()) throw Error(Errc::InvalidArgument, "empty trajectory");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, intr.width - 1.0), uy(0.0, intr.height - 1.0);
  std::vector<Landmark> out;
  const long long max_attempts = 50LL * count;
  for (long long attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
    const auto& origin = traj[static_cast<std::size_t>(attempt % static_cast<long long>(traj.size()))].pose;
    const double x = ux(rng), y = uy(rng);
    const Vec3 d = origin.rotation * Vec3((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
    const Hit hit = cast_ray(scene, origin.translation, d);
    if (!std::isfinite(hit.t)) continue;
    Landmark lm;
    lm.id = static_cast<std::int64_t>(out.size());
    lm.position = origin.translation + hit.t * d;
    for (std::size_t f = 0; f < traj.size(); ++f)
      if (auto px = visible_pixel(scene, traj[f].pose, intr, lm.position))
        lm.observations.push_back({static_cast<std::int64_t>(f), *px});
    if (lm.observations.size() >= 2) out.push_back(std::move(lm));
  }
  if (out.empty()) throw Error(Errc::NoVisibleSurface, "no surface point is visible from two poses");
  return out;
}

// ---------------------------------------------------------------------------
// Presets

/// Textured wall facing the camera at the origin, `depth` metres along +y,
/// centred at height 0.
inline Scene plane_scene(double depth = 2.0, int texture = 3) {
  Scene s;
  Plane wall;
  wall.center = Vec3(0.0, depth, 0.0);
  wall.normal = -Vec3::UnitY();
  wall.u_axis = Vec3::UnitX();
  wall.texture = texture;
  s.primitives.push_back(wall);
  s.bounds = {Vec3(-4.0, depth - 0.01, -3.0), Vec3(4.0, depth + 0.01, 3.0)};
  s.orbit_radius = depth;
  return s;
}

/// 5 x 5 x 2.8 m room with furniture-sized boxes and spheres.
inline Scene room_scene() {
  Scene s;
  const double hx = 2.5, hy = 2.5, hz = 2.8;
  auto wall = [&](Vec3 c, Vec3 n, Vec3 u, double a, double b, int tex) {
    Plane p;
    p.center = c;
    p.normal = n;
    p.u_axis = u;
    p.half_extent = {a, b};
    p.texture = tex;
    s.primitives.push_back(p);
  };
  wall({0, 0, 0}, Vec3::UnitZ(), Vec3::UnitX(), hx, hy, 2);
  wall({0, 0, hz}, -Vec3::UnitZ(), Vec3::UnitX(), hx, hy, 3);
  wall({hx, 0, hz / 2}, -Vec3::UnitX(), Vec3::UnitY(), hy, hz / 2, 4);
  wall({-hx, 0, hz / 2}, Vec3::UnitX(), Vec3::UnitY(), hy, hz / 2, 5);
  wall({0, hy, hz / 2}, -Vec3::UnitY(), Vec3::UnitX(), hx, hz / 2, 6);
  wall({0, -hy, hz / 2}, Vec3::UnitY(), Vec3::UnitX(), hx, hz / 2, 7);
  s.primitives.push_back(Box{Vec3(0.8, 1.0, 0.0), Vec3(1.6, 1.8, 0.75), 8});
  s.primitives.push_back(Box{Vec3(-2.5, -1.0, 0.0), Vec3(-1.9, 0.5, 1.8), 9});
  s.primitives.push_back(Box{Vec3(-1.2, 1.4, 0.0), Vec3(-0.6, 2.0, 0.5), 10});
  s.primitives.push_back(Box{Vec3(1.7, -0.5, 0.9), Vec3(2.5, 0.6, 1.3), 11});
  s.primitives.push_back(Sphere{Vec3(1.3, -1.2, 1.0), 0.35, 12});
  s.primitives.push_back(Sphere{Vec3(-1.0, -1.5, 1.6), 0.25, 13});
  s.bounds = {Vec3(-hx, -hy, 0.0), Vec3(hx, hy, hz)};
  s.orbit_radius = 0.8;
  return s;
}

/// Intrinsics used by the presets: 320 x 240, f = 260 px.
inline CameraIntrinsics default_intrinsics(int width = 320, int height = 240) {
  const double f = 260.0 * width / 320.0;
  return {f, f, 0.5 * (width - 1), 0.5 * (height - 1), width, height};
}

// ---------------------------------------------------------------------------
// Scene JSON

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::ParseError, "scene: expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
inline nlohmann::json vec3_to(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

inline nlohmann::json scene_to_json(const Scene& scene) {
  using detail::vec3_to;
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& prim : scene.primitives) {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Plane>) {
            prims.push_back({{"type", "plane"}, {"center", vec3_to(p.center)}, {"normal", vec3_to(p.normal)},
                             {"u_axis", vec3_to(p.u_axis)},
                             {"half_extent", {p.half_extent.x(), p.half_extent.y()}}, {"texture", p.texture}});
          } else if constexpr (std::is_same_v<T, Box>) {
            prims.push_back({{"type", "box"}, {"min", vec3_to(p.min)}, {"max", vec3_to(p.max)}, {"texture", p.texture}});
          } else {
            prims.push_back({{"type", "sphere"}, {"center", vec3_to(p.center)}, {"radius", p.radius},
                             {"texture", p.texture}});
          }
        },
        prim);
  }
  return {{"bounds", {{"min", vec3_to(scene.bounds.min)}, {"max", vec3_to(scene.bounds.max)}}},
          {"orbit_radius", scene.orbit_radius},
          {"primitives", prims}};
}

inline Scene scene_from_json(const nlohmann::json& j) {
  using detail::vec3_from;
  try {
    Scene s;
    s.bounds.min = vec3_from(j.at("bounds").at("min"));
    s.bounds.max = vec3_from(j.at("bounds").at("max"));
    s.orbit_radius = j.value("orbit_radius", 2.0);
    for (const auto& p : j.at("primitives")) {
      const auto type = p.at("type").get<std::string>();
      const int tex = p.value("texture", 2);
      if (type == "plane") {
        Plane pl;
        pl.center = vec3_from(p.at("center"));
        pl.normal = vec3_from(p.at("normal")).normalized();
        pl.u_axis = vec3_from(p.at("u_axis"));
        pl.u_axis = (pl.u_axis - pl.u_axis.dot(pl.normal) * pl.normal).normalized();
        if (p.contains("half_extent")) pl.half_extent = {p["half_extent"][0].get<double>(), p["half_extent"][1].get<double>()};
        pl.texture = tex;
        s.primitives.push_back(pl);
      } else if (type == "box") {
        s.primitives.push_back(Box{vec3_from(p.at("min")), vec3_from(p.at("max")), tex});
      } else if (type == "sphere") {
        s.primitives.push_back(Sphere{vec3_from(p.at("center")), p.at("radius").get<double>(), tex});
      } else {
        throw Error(Errc::ParseError, "scene: unknown primitive type '" + type + "'");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("scene: ") + e.what());
  }
}

}  // namespace smap::synth
