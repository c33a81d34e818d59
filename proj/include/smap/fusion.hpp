#pragma once

// Voxel-hashed TSDF: incremental integration of depth maps, marching-cubes
// extraction and ray-cast rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "smap/core.hpp"
#include "smap/marching_cubes.hpp"
#include "smap/mesh.hpp"

namespace smap {

struct TsdfConfig {
  double voxel_size = 0.02;
  double truncation = 0.08;
  double max_weight = 100.0;
  int block_size = 8;

  void validate() const {
    if (!(voxel_size > 0.0)) throw Error(Errc::ConfigError, "fusion.voxel_size must be > 0");
    if (!(truncation >= 2.0 * voxel_size)) throw Error(Errc::ConfigError, "fusion.truncation must be >= 2 voxels");
    if (!(max_weight > 0.0)) throw Error(Errc::ConfigError, "fusion.max_weight must be > 0");
    if (block_size < 1 || block_size > 64) throw Error(Errc::ConfigError, "fusion.block_size must be in [1, 64]");
  }
};

using Index3 = Eigen::Vector3i;

/// sdf is normalised by the truncation distance and stays in [-1, 1].
struct Voxel {
  double sdf = 0.0;
  double weight = 0.0;
};

// Block coordinates pack into 21 bits per axis.
inline constexpr int kBlockKeyBits = 21;
inline constexpr std::int64_t kBlockKeyOffset = std::int64_t{1} << (kBlockKeyBits - 1);

inline bool block_coord_in_range(const Index3& b) {
  for (int i = 0; i < 3; ++i)
    if (b[i] < -kBlockKeyOffset || b[i] >= kBlockKeyOffset) return false;
  return true;
}

inline std::uint64_t block_key(const Index3& b) {
  if (!block_coord_in_range(b)) throw Error(Errc::InvalidArgument, "block coordinate outside the hashable range");
  const auto mask = (std::uint64_t{1} << kBlockKeyBits) - 1;
  return (std::uint64_t(b.x() + kBlockKeyOffset) & mask) |
         ((std::uint64_t(b.y() + kBlockKeyOffset) & mask) << kBlockKeyBits) |
         ((std::uint64_t(b.z() + kBlockKeyOffset) & mask) << (2 * kBlockKeyBits));
}

inline Index3 block_coord(std::uint64_t key) {
  const auto mask = (std::uint64_t{1} << kBlockKeyBits) - 1;
  return {static_cast<int>(std::int64_t(key & mask) - kBlockKeyOffset),
          static_cast<int>(std::int64_t((key >> kBlockKeyBits) & mask) - kBlockKeyOffset),
          static_cast<int>(std::int64_t((key >> (2 * kBlockKeyBits)) & mask) - kBlockKeyOffset)};
}

inline int floor_div(int a, int b) {
  const int q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

class TsdfVolume {
 public:
  using Block = std::vector<Voxel>;

  explicit TsdfVolume(TsdfConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const TsdfConfig& config() const noexcept { return cfg_; }
  std::size_t block_count() const noexcept { return blocks_.size(); }
  bool empty() const noexcept { return blocks_.empty(); }

  std::vector<std::uint64_t> block_keys() const {
    std::vector<std::uint64_t> keys;
    keys.reserve(blocks_.size());
    for (const auto& kv : blocks_) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    return keys;
  }

  Index3 block_of(const Index3& voxel) const {
    const int b = cfg_.block_size;
    return {floor_div(voxel.x(), b), floor_div(voxel.y(), b), floor_div(voxel.z(), b)};
  }

  std::size_t local_index(const Index3& voxel, const Index3& block) const {
    const int b = cfg_.block_size;
    const Index3 l = voxel - block * b;
    return static_cast<std::size_t>((l.z() * b + l.y()) * b + l.x());
  }

  /// Voxel centres sit at integer multiples of the voxel size.
  Vec3 voxel_center(const Index3& voxel) const { return voxel.cast<double>() * cfg_.voxel_size; }

  const Block* find_block(std::uint64_t key) const {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
  }
  Block* find_block(std::uint64_t key) {
    auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
  }
  Block& allocate_block(std::uint64_t key) {
    auto [it, inserted] = blocks_.try_emplace(key);
    if (inserted) it->second.assign(voxels_per_block(), Voxel{});
    return it->second;
  }
  /// Inserts a fully built block; the caller guarantees its size.
  void adopt_block(std::uint64_t key, Block block) { blocks_.insert_or_assign(key, std::move(block)); }

  std::size_t voxels_per_block() const {
    return static_cast<std::size_t>(cfg_.block_size) * cfg_.block_size * cfg_.block_size;
  }

  const Voxel* find(const Index3& voxel) const {
    const Index3 b = block_of(voxel);
    if (!block_coord_in_range(b)) return nullptr;
    const Block* blk = find_block(block_key(b));
    return blk ? &(*blk)[local_index(voxel, b)] : nullptr;
  }

  Voxel& voxel(const Index3& voxel) {
    const Index3 b = block_of(voxel);
    return allocate_block(block_key(b))[local_index(voxel, b)];
  }

  /// Trilinear sdf (normalised); nullopt when any of the 8 neighbours is
  /// unallocated or unobserved.
  std::optional<double> sample(const Vec3& world) const {
    const Vec3 g = world / cfg_.voxel_size;
    const Vec3 fl = g.array().floor();
    const Index3 base = fl.cast<int>();
    const Vec3 f = g - fl;
    double corner[8];
    for (int c = 0; c < 8; ++c) {
      const Voxel* v = find(base + Index3(c & 1, (c >> 1) & 1, (c >> 2) & 1));
      if (!v || v->weight <= 0.0) return std::nullopt;
      corner[c] = v->sdf;
    }
    const double x00 = corner[0] + f.x() * (corner[1] - corner[0]);
    const double x10 = corner[2] + f.x() * (corner[3] - corner[2]);
    const double x01 = corner[4] + f.x() * (corner[5] - corner[4]);
    const double x11 = corner[6] + f.x() * (corner[7] - corner[6]);
    const double y0 = x00 + f.y() * (x10 - x00);
    const double y1 = x01 + f.y() * (x11 - x01);
    return y0 + f.z() * (y1 - y0);
  }

  bool has_block_at(const Vec3& world) const {
    const Vec3 g = (world / cfg_.voxel_size).array().floor();
    const Index3 b = block_of(g.cast<int>());
    return block_coord_in_range(b) && find_block(block_key(b)) != nullptr;
  }

 private:
  TsdfConfig cfg_;
  std::unordered_map<std::uint64_t, Block> blocks_;
};

// ---------------------------------------------------------------------------
// Integration

/// What one depth map says about one voxel: the pixel it projects to and its
/// truncated, normalised signed distance. nullopt when the voxel is not
/// observed or lies outside the band (-truncation, +truncation].
struct VoxelObservation {
  int x = 0;
  int y = 0;
  double sdf = 0.0;
};

inline std::optional<VoxelObservation> observe_voxel(const Vec3& point_cam, const DepthMap& depth,
                                                     const CameraIntrinsics& intr, double truncation) {
  const double z = point_cam.z();
  if (!(z > 1e-6)) return std::nullopt;
  const int x = static_cast<int>(std::floor(intr.fx * point_cam.x() / z + intr.cx + 0.5));
  const int y = static_cast<int>(std::floor(intr.fy * point_cam.y() / z + intr.cy + 0.5));
  if (!depth.contains(x, y) || !depth.valid(x, y)) return std::nullopt;
  const double dist = depth.depth(x, y) - z;
  if (dist <= -truncation || dist > truncation) return std::nullopt;
  return VoxelObservation{x, y, std::clamp(dist / truncation, -1.0, 1.0)};
}

struct IntegrationStats {
  std::vector<std::uint64_t> touched_blocks;  // sorted keys of blocks with >= 1 update
  std::size_t updated_voxels = 0;
};

/// Blocks whose voxels could fall inside the truncation band of some valid
/// pixel: the bounding box of each pixel's footprint between d - trunc and
/// d + trunc. A superset of the blocks that actually receive updates.
inline std::vector<std::uint64_t> candidate_blocks(const TsdfVolume& vol, const DepthMap& depth,
                                                   const RigidPose& pose, const CameraIntrinsics& intr) {
  const auto& cfg = vol.config();
  const double pad = 1e-9;
  std::unordered_set<std::uint64_t> keys;
  keys.reserve(static_cast<std::size_t>(depth.width()) * depth.height() / 4 + 16);
  const int bs = cfg.block_size;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const double d = depth.depth(x, y);
      const double zs[2] = {std::max(d - cfg.truncation, 1e-6), d + cfg.truncation};
      Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
      Vec3 hi = -lo;
      for (double z : zs)
        for (double du : {-0.5, 0.5})
          for (double dv : {-0.5, 0.5}) {
            const Vec3 pc(((x + du) - intr.cx) / intr.fx * z, ((y + dv) - intr.cy) / intr.fy * z, z);
            const Vec3 pw = pose.apply(pc);
            lo = lo.cwiseMin(pw);
            hi = hi.cwiseMax(pw);
          }
      const Index3 vlo = ((lo.array() - pad) / cfg.voxel_size).ceil().cast<int>();
      const Index3 vhi = ((hi.array() + pad) / cfg.voxel_size).floor().cast<int>();
      const Index3 blo(floor_div(vlo.x(), bs), floor_div(vlo.y(), bs), floor_div(vlo.z(), bs));
      const Index3 bhi(floor_div(vhi.x(), bs), floor_div(vhi.y(), bs), floor_div(vhi.z(), bs));
      for (int bz = blo.z(); bz <= bhi.z(); ++bz)
        for (int by = blo.y(); by <= bhi.y(); ++by)
          for (int bx = blo.x(); bx <= bhi.x(); ++bx) keys.insert(block_key(Index3(bx, by, bz)));
    }
  std::vector<std::uint64_t> out(keys.begin(), keys.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Fuses one depth map. Each observed voxel in the truncation band takes a
/// weighted running average with weight = confidence (1 without a confidence
/// map); the accumulated weight saturates at max_weight. Blocks are allocated
/// only when at least one of their voxels is updated.
inline IntegrationStats integrate(TsdfVolume& vol, const DepthMap& depth, const Raster<float>* confidence,
                                  const RigidPose& pose, const CameraIntrinsics& intr) {
  pose.validate();
  if (confidence && !depth.same_shape(*confidence))
    throw Error(Errc::InvalidArgument, "confidence and depth dimensions differ");
  const auto& cfg = vol.config();
  const RigidPose cam_from_world = pose.inverse();
  const int bs = cfg.block_size;

  IntegrationStats stats;
  TsdfVolume::Block scratch;
  for (std::uint64_t key : candidate_blocks(vol, depth, pose, intr)) {
    TsdfVolume::Block* existing = vol.find_block(key);
    if (!existing) scratch.assign(vol.voxels_per_block(), Voxel{});
    TsdfVolume::Block& blk = existing ? *existing : scratch;
    const Index3 origin = block_coord(key) * bs;
    std::size_t updates = 0;
    for (int k = 0; k < bs; ++k)
      for (int j = 0; j < bs; ++j)
        for (int i = 0; i < bs; ++i) {
          const Vec3 pc = cam_from_world.apply(vol.voxel_center(origin + Index3(i, j, k)));
          const auto obs = observe_voxel(pc, depth, intr, cfg.truncation);
          if (!obs) continue;
          const double w = confidence ? double((*confidence)(obs->x, obs->y)) : 1.0;
          if (!(w > 0.0)) continue;
          Voxel& v = blk[static_cast<std::size_t>((k * bs + j) * bs + i)];
          v.sdf = (v.weight * v.sdf + w * obs->sdf) / (v.weight + w);
          v.weight = std::min(v.weight + w, cfg.max_weight);
          ++updates;
        }
    if (updates == 0) continue;
    if (!existing) vol.adopt_block(key, scratch);
    stats.touched_blocks.push_back(key);
    stats.updated_voxels += updates;
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Mesh extraction

/// Marching cubes over every allocated block, with cubes reaching one voxel
/// into neighbouring blocks. Cubes touching an unallocated or zero-weight voxel
/// are skipped. Vertices on shared edges are shared.
inline TriangleMesh extract_mesh(const TsdfVolume& vol) {
  TriangleMesh mesh;
  const auto& cfg = vol.config();
  const int bs = cfg.block_size;
  const auto& table = mc::triangle_table();
  const auto& edges = mc::edges();

  // Edge id: lower voxel index (20 bits per axis) and axis.
  auto edge_id = [](const Index3& v, int axis) {
    const auto m = (std::uint64_t{1} << 20) - 1;
    return (std::uint64_t(v.x() + (1 << 19)) & m) | ((std::uint64_t(v.y() + (1 << 19)) & m) << 20) |
           ((std::uint64_t(v.z() + (1 << 19)) & m) << 40) | (std::uint64_t(axis) << 60);
  };
  std::unordered_map<std::uint64_t, std::int32_t> vertex_of_edge;

  for (std::uint64_t key : vol.block_keys()) {
    const Index3 origin = block_coord(key) * bs;
    for (int k = 0; k < bs; ++k)
      for (int j = 0; j < bs; ++j)
        for (int i = 0; i < bs; ++i) {
          const Index3 base = origin + Index3(i, j, k);
          double value[8];
          bool ok = true;
          int cube = 0;
          for (int c = 0; c < 8 && ok; ++c) {
            const Voxel* v = vol.find(base + Index3(c & 1, (c >> 1) & 1, (c >> 2) & 1));
            if (!v || v->weight <= 0.0) {
              ok = false;
              break;
            }
            value[c] = v->sdf;
            if (v->sdf < 0.0) cube |= 1 << c;
          }
          if (!ok || cube == 0 || cube == 255) continue;
          for (const auto& tri : table[cube]) {
            std::array<std::int32_t, 3> idx{};
            for (int t = 0; t < 3; ++t) {
              const auto& e = edges[tri[t]];
              const Index3 va = base + Index3(e.a & 1, (e.a >> 1) & 1, (e.a >> 2) & 1);
              const std::uint64_t id = edge_id(va, e.axis);
              auto it = vertex_of_edge.find(id);
              if (it == vertex_of_edge.end()) {
                const double s = value[e.a] / (value[e.a] - value[e.b]);
                const Vec3 pa = vol.voxel_center(va);
                Vec3 p = pa;
                p[e.axis] += s * cfg.voxel_size;
                it = vertex_of_edge.emplace(id, static_cast<std::int32_t>(mesh.vertices.size())).first;
                mesh.vertices.push_back(p.cast<float>());
              }
              idx[t] = it->second;
            }
            mesh.triangles.push_back(idx);
          }
        }
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// Rendering

struct RenderConfig {
  double min_depth = 0.1;
  double max_depth = 10.0;
};

/// Per-pixel ray march to the first positive-to-negative sdf crossing,
/// refined by linear interpolation. Unallocated space is skipped half a block
/// at a time.
inline DepthMap render_depth(const TsdfVolume& vol, const RigidPose& pose, const CameraIntrinsics& intr,
                             const RenderConfig& rcfg = {}) {
  pose.validate();
  const auto& cfg = vol.config();
  DepthMap out(intr.width, intr.height);
  if (vol.empty()) return out;
  const double block_len = cfg.voxel_size * cfg.block_size;
  for (int y = 0; y < intr.height; ++y)
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 dir_cam((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
      const Vec3 dir = pose.rotation * dir_cam;  // world displacement per unit of camera z
      const double len = dir.norm();
      double z = rcfg.min_depth;
      bool have_prev = false;
      double prev_z = 0.0, prev_s = 0.0;
      while (z <= rcfg.max_depth) {
        const Vec3 p = pose.translation + dir * z;
        if (!vol.has_block_at(p)) {
          have_prev = false;
          z += 0.5 * block_len / len;
          continue;
        }
        const auto s = vol.sample(p);
        if (!s) {
          have_prev = false;
          z += 0.5 * cfg.voxel_size / len;
          continue;
        }
        if (have_prev && prev_s > 0.0 && *s < 0.0) {
          out.set(x, y, prev_z + (z - prev_z) * prev_s / (prev_s - *s));
          break;
        }
        have_prev = true;
        prev_z = z;
        prev_s = *s;
        const double metric_step = *s > 0.0 ? std::max(0.5 * cfg.voxel_size, 0.8 * *s * cfg.truncation)
                                            : 0.5 * cfg.voxel_size;
        z += metric_step / len;
      }
    }
  return out;
}

}  // namespace smap
