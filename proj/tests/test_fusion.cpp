#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <tuple>

#include "support.hpp"

using namespace smap;
using smap::test::code_of;

namespace {

using Key3 = std::tuple<int, int, int>;

/// Sphere of radius `r` about the origin written straight into the volume.
TsdfVolume sphere_volume(double r, int half_extent) {
  TsdfVolume vol;
  const auto& cfg = vol.config();
  for (int k = -half_extent; k <= half_extent; ++k)
    for (int j = -half_extent; j <= half_extent; ++j)
      for (int i = -half_extent; i <= half_extent; ++i) {
        const Index3 idx(i, j, k);
        Voxel& v = vol.voxel(idx);
        v.sdf = std::clamp((vol.voxel_center(idx).norm() - r) / cfg.truncation, -1.0, 1.0);
        v.weight = 1.0;
      }
  return vol;
}

struct PlaneView {
  CameraIntrinsics intr = synth::default_intrinsics(160, 120);
  RigidPose pose = test::facing_plus_y(Vec3(0.013, -0.007, 0.021));
  synth::RenderedView view = synth::render(synth::plane_scene(2.0), pose, intr);
};

}  // namespace

TEST(TsdfConfig, DefaultsAndValidation) {
  TsdfConfig cfg;
  EXPECT_EQ(cfg.voxel_size, 0.02);
  EXPECT_EQ(cfg.truncation, 0.08);
  EXPECT_EQ(cfg.max_weight, 100.0);
  EXPECT_EQ(cfg.block_size, 8);
  cfg.truncation = 0.03;  // below two voxels
  EXPECT_EQ(code_of([&] { cfg.validate(); }), Errc::ConfigError);
  cfg = {};
  cfg.voxel_size = 0;
  EXPECT_EQ(code_of([&] { TsdfVolume v(cfg); }), Errc::ConfigError);
}

TEST(BlockKey, RoundTrip) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> u(-(1 << 20), (1 << 20) - 1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const Index3 b(u(rng), u(rng), u(rng));
    const auto key = block_key(b);
    EXPECT_EQ(block_coord(key), b);
    seen.insert(key);
  }
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_EQ(block_coord(block_key(Index3(-1, 0, 1))), Index3(-1, 0, 1));
  EXPECT_EQ(code_of([] { block_key(Index3(1 << 20, 0, 0)); }), Errc::InvalidArgument);
}

TEST(FloorDiv, RoundsTowardNegativeInfinity) {
  EXPECT_EQ(floor_div(7, 8), 0);
  EXPECT_EQ(floor_div(8, 8), 1);
  EXPECT_EQ(floor_div(-1, 8), -1);
  EXPECT_EQ(floor_div(-8, 8), -1);
  EXPECT_EQ(floor_div(-9, 8), -2);
  for (int a = -100; a <= 100; ++a)
    EXPECT_EQ(floor_div(a, 8), static_cast<int>(std::floor(a / 8.0)));
}

TEST(TsdfVolume, VoxelAccessAllocatesBlocks) {
  TsdfVolume vol;
  EXPECT_TRUE(vol.empty());
  EXPECT_EQ(vol.find(Index3(0, 0, 0)), nullptr);
  vol.voxel(Index3(-1, 3, 9)).weight = 2.0;
  EXPECT_EQ(vol.block_count(), 1u);
  EXPECT_EQ(block_coord(vol.block_keys()[0]), Index3(-1, 0, 1));
  ASSERT_NE(vol.find(Index3(-1, 3, 9)), nullptr);
  EXPECT_EQ(vol.find(Index3(-1, 3, 9))->weight, 2.0);
  EXPECT_EQ(vol.find(Index3(-2, 0, 8))->weight, 0.0);  // same block, untouched voxel
  EXPECT_EQ(vol.voxel_center(Index3(-1, 3, 9)), Vec3(-0.02, 0.06, 0.18));
}

TEST(TsdfVolume, TrilinearSampleOfLinearField) {
  TsdfVolume vol;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 4; ++i) {
        Voxel& v = vol.voxel(Index3(i, j, k));
        v.sdf = 0.1 * i - 0.05 * j + 0.02 * k;
        v.weight = 1.0;
      }
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 0.06 - 1e-9);
  for (int t = 0; t < 200; ++t) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const auto s = vol.sample(p);
    ASSERT_TRUE(s);
    const Vec3 g = p / 0.02;
    EXPECT_NEAR(*s, 0.1 * g.x() - 0.05 * g.y() + 0.02 * g.z(), 1e-12);
  }
  EXPECT_FALSE(vol.sample(Vec3(0.07, 0.0, 0.0)));  // neighbour at i = 4 is unobserved
}

TEST(ObserveVoxel, TruncationBandIsHalfOpen) {
  const auto k = test::intrinsics_500();
  const DepthMap depth = test::constant_depth(640, 480, 2.0);
  const double trunc = 0.08;
  // 0.25 is exact in binary, so both edges are tested without round-off.
  EXPECT_FALSE(observe_voxel(Vec3(0, 0, 2.25), depth, k, 0.25));  // dist = -trunc
  const auto front = observe_voxel(Vec3(0, 0, 1.75), depth, k, 0.25);
  ASSERT_TRUE(front);
  EXPECT_NEAR(front->sdf, 1.0, 1e-12);
  const auto at = observe_voxel(Vec3(0, 0, 2.0), depth, k, trunc);
  ASSERT_TRUE(at);
  EXPECT_EQ(at->sdf, 0.0);
  EXPECT_EQ(at->x, 320);
  EXPECT_EQ(at->y, 240);
  const auto behind = observe_voxel(Vec3(0, 0, 2.04), depth, k, trunc);
  ASSERT_TRUE(behind);
  EXPECT_NEAR(behind->sdf, -0.5, 1e-12);
  EXPECT_FALSE(observe_voxel(Vec3(0, 0, -1.0), depth, k, trunc));
  EXPECT_FALSE(observe_voxel(Vec3(10, 0, 2.0), depth, k, trunc));
}

TEST(Integrate, MatchesPerVoxelReference) {
  const CameraIntrinsics intr{40.0, 40.0, 19.5, 14.5, 40, 30};
  const RigidPose pose = test::facing_plus_y(Vec3(0.013, -0.007, 0.021));
  DepthMap depth(40, 30);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> ud(1.0, 1.5), keep(0.0, 1.0);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      if (keep(rng) < 0.9) depth.set(x, y, ud(rng));

  TsdfVolume vol;
  const auto stats = integrate(vol, depth, nullptr, pose, intr);
  const double trunc = vol.config().truncation, vs = vol.config().voxel_size;

  // Reference: every voxel in a box around the frustum slab.
  Vec3 lo = Vec3::Constant(1e9), hi = -lo;
  for (double z : {0.9, 1.6})
    for (double u : {-1.0, 41.0})
      for (double v : {-1.0, 31.0}) {
        const Vec3 pw = pose.apply(unproject(Vec2(u, v), z, intr));
        lo = lo.cwiseMin(pw);
        hi = hi.cwiseMax(pw);
      }
  const RigidPose cam = pose.inverse();
  std::map<Key3, double> expected;
  for (int k = int(std::floor(lo.z() / vs)); k <= int(std::ceil(hi.z() / vs)); ++k)
    for (int j = int(std::floor(lo.y() / vs)); j <= int(std::ceil(hi.y() / vs)); ++j)
      for (int i = int(std::floor(lo.x() / vs)); i <= int(std::ceil(hi.x() / vs)); ++i) {
        const Vec3 pc = cam.apply(Vec3(i, j, k) * vs);
        if (!(pc.z() > 1e-6)) continue;
        const int u = int(std::floor(intr.fx * pc.x() / pc.z() + intr.cx + 0.5));
        const int v = int(std::floor(intr.fy * pc.y() / pc.z() + intr.cy + 0.5));
        if (u < 0 || v < 0 || u >= 40 || v >= 30 || !depth.valid(u, v)) continue;
        const double dist = depth.depth(u, v) - pc.z();
        if (dist <= -trunc || dist > trunc) continue;
        expected[{i, j, k}] = std::clamp(dist / trunc, -1.0, 1.0);
      }

  ASSERT_GT(expected.size(), 1000u);
  EXPECT_EQ(stats.updated_voxels, expected.size());
  for (const auto& [key, sdf] : expected) {
    const auto [i, j, k] = key;
    const Voxel* v = vol.find(Index3(i, j, k));
    ASSERT_NE(v, nullptr);
    EXPECT_EQ(v->weight, 1.0);
    EXPECT_NEAR(v->sdf, sdf, 1e-12);
  }
  // Nothing else was written, and every allocated block holds an update.
  const int bs = vol.config().block_size;
  std::set<std::uint64_t> blocks_with_updates;
  for (auto key : vol.block_keys()) {
    const Index3 origin = block_coord(key) * bs;
    for (int k = 0; k < bs; ++k)
      for (int j = 0; j < bs; ++j)
        for (int i = 0; i < bs; ++i) {
          const Index3 idx = origin + Index3(i, j, k);
          if (vol.find(idx)->weight > 0.0) {
            EXPECT_TRUE(expected.count({idx.x(), idx.y(), idx.z()}));
            blocks_with_updates.insert(key);
          }
        }
  }
  EXPECT_EQ(blocks_with_updates.size(), vol.block_count());
  EXPECT_EQ(std::vector<std::uint64_t>(blocks_with_updates.begin(), blocks_with_updates.end()),
            stats.touched_blocks);
}

TEST(Integrate, CandidateBlocksCoverTouchedBlocks) {
  const PlaneView pv;
  TsdfVolume vol;
  const auto cands = candidate_blocks(vol, pv.view.depth, pv.pose, pv.intr);
  const auto stats = integrate(vol, pv.view.depth, nullptr, pv.pose, pv.intr);
  EXPECT_TRUE(std::includes(cands.begin(), cands.end(), stats.touched_blocks.begin(), stats.touched_blocks.end()));
  EXPECT_TRUE(std::is_sorted(stats.touched_blocks.begin(), stats.touched_blocks.end()));
}

TEST(Integrate, ConfidenceWeightedAverage) {
  const CameraIntrinsics intr{20.0, 20.0, 9.5, 9.5, 20, 20};
  TsdfVolume vol;
  Raster<float> c1(20, 20, 0.25f), c2(20, 20, 0.75f);
  integrate(vol, test::constant_depth(20, 20, 1.0), &c1, RigidPose{}, intr);
  integrate(vol, test::constant_depth(20, 20, 1.04), &c2, RigidPose{}, intr);
  // Voxel on the optical axis at z = 1.0: sdf 0 then 0.5.
  const Voxel* v = vol.find(Index3(0, 0, 50));
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->weight, 1.0, 1e-12);
  EXPECT_NEAR(v->sdf, 0.75 * 0.5, 1e-12);
}

TEST(Integrate, ZeroConfidenceAndInvalidDepthAllocateNothing) {
  const CameraIntrinsics intr{20.0, 20.0, 9.5, 9.5, 20, 20};
  TsdfVolume vol;
  Raster<float> zero(20, 20, 0.0f);
  auto stats = integrate(vol, test::constant_depth(20, 20, 1.0), &zero, RigidPose{}, intr);
  EXPECT_EQ(stats.updated_voxels, 0u);
  stats = integrate(vol, DepthMap(20, 20), nullptr, RigidPose{}, intr);
  EXPECT_TRUE(stats.touched_blocks.empty());
  EXPECT_TRUE(vol.empty());
}

TEST(Integrate, WeightSaturates) {
  const CameraIntrinsics intr{20.0, 20.0, 9.5, 9.5, 20, 20};
  TsdfVolume vol;
  const auto depth = test::constant_depth(20, 20, 1.0);
  for (int i = 0; i < 150; ++i) integrate(vol, depth, nullptr, RigidPose{}, intr);
  EXPECT_EQ(vol.find(Index3(0, 0, 50))->weight, 100.0);
  EXPECT_EQ(vol.find(Index3(0, 0, 49))->weight, 100.0);
}

TEST(Integrate, OnlyTouchedBlocksChange) {
  const PlaneView pv;
  TsdfVolume vol;
  integrate(vol, pv.view.depth, nullptr, pv.pose, pv.intr);
  std::map<std::uint64_t, TsdfVolume::Block> before;
  for (auto key : vol.block_keys()) before[key] = *vol.find_block(key);

  // A second, narrower view.
  const RigidPose pose2 = test::facing_plus_y(Vec3(0.3, 0.0, 0.0));
  const CameraIntrinsics small = synth::default_intrinsics(40, 30);
  const auto view2 = synth::render(synth::plane_scene(2.0), pose2, small);
  const auto stats = integrate(vol, view2.depth, nullptr, pose2, small);
  const std::set<std::uint64_t> touched(stats.touched_blocks.begin(), stats.touched_blocks.end());
  std::size_t unchanged = 0;
  for (const auto& [key, blk] : before) {
    if (touched.count(key)) continue;
    const auto& now = *vol.find_block(key);
    for (std::size_t i = 0; i < blk.size(); ++i) {
      ASSERT_EQ(now[i].sdf, blk[i].sdf);
      ASSERT_EQ(now[i].weight, blk[i].weight);
    }
    ++unchanged;
  }
  EXPECT_GT(unchanged, 0u);
  EXPECT_LT(touched.size(), before.size());
}

TEST(Integrate, ConfidenceShapeMismatchRejected) {
  TsdfVolume vol;
  Raster<float> conf(3, 3, 1.0f);
  EXPECT_EQ(code_of([&] { integrate(vol, DepthMap(4, 4), &conf, RigidPose{}, test::intrinsics_500()); }),
            Errc::InvalidArgument);
}

TEST(ExtractMesh, EmptyVolumeGivesEmptyMesh) { EXPECT_TRUE(extract_mesh(TsdfVolume{}).empty()); }

TEST(ExtractMesh, SphereRadiusAndTopology) {
  const auto vol = sphere_volume(0.5, 30);
  const auto mesh = extract_mesh(vol);
  ASSERT_FALSE(mesh.empty());
  ASSERT_TRUE(mesh.is_valid());
  double err = 0.0;
  for (const auto& v : mesh.vertices) err += std::abs(v.cast<double>().norm() - 0.5);
  EXPECT_LT(err / mesh.vertices.size(), 0.01);

  // Closed and consistently oriented: every directed edge occurs once and its
  // reverse occurs once.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) ++directed[{t[e], t[(e + 1) % 3]}];
  for (const auto& [edge, n] : directed) {
    ASSERT_EQ(n, 1);
    ASSERT_TRUE(directed.count({edge.second, edge.first}));
  }

  // Normals point toward positive sdf, i.e. outward. Zero-area triangles
  // (vertices coinciding on a zero-sdf voxel) have no orientation.
  std::size_t outward = 0, oriented = 0;
  double volume = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]].cast<double>(), b = mesh.vertices[t[1]].cast<double>(),
               c = mesh.vertices[t[2]].cast<double>();
    volume += a.dot(b.cross(c)) / 6.0;
    const Vec3 n = (b - a).cross(c - a);
    if (n.norm() < 1e-12) continue;
    ++oriented;
    if (n.dot(a + b + c) > 0.0) ++outward;
  }
  EXPECT_GT(oriented, mesh.triangles.size() * 9 / 10);
  EXPECT_EQ(outward, oriented);
  EXPECT_NEAR(volume, 4.0 / 3.0 * M_PI * 0.125, 0.01 * 4.0 / 3.0 * M_PI * 0.125);
}

TEST(ExtractMesh, Deterministic) {
  const auto vol = sphere_volume(0.3, 20);
  EXPECT_TRUE(extract_mesh(vol) == extract_mesh(vol));
}

TEST(RenderDepth, PlaneRoundTrip) {
  const PlaneView pv;
  TsdfVolume vol;
  integrate(vol, pv.view.depth, nullptr, pv.pose, pv.intr);
  const auto rendered = render_depth(vol, pv.pose, pv.intr);
  const auto m = depth_metrics(rendered, pv.view.depth);
  EXPECT_LT(m.rmse, 0.02);
  EXPECT_GT(m.count, pv.view.depth.valid_count() * 9 / 10);
}

TEST(RenderDepth, SphereFromOutside) {
  const auto vol = sphere_volume(0.5, 30);
  const CameraIntrinsics intr = synth::default_intrinsics(64, 48);
  const RigidPose pose = look_at(Vec3(0, -2, 0), Vec3::Zero());
  const auto d = render_depth(vol, pose, intr);
  ASSERT_TRUE(d.valid(32, 24));
  EXPECT_NEAR(d.depth(32, 24), 1.5, 0.01);
  EXPECT_FALSE(d.valid(0, 0));
}

TEST(RenderDepth, EmptyVolumeIsAllInvalid) {
  EXPECT_EQ(render_depth(TsdfVolume{}, RigidPose{}, synth::default_intrinsics(16, 12)).valid_count(), 0u);
}
