#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "support.hpp"

using namespace smap;
using smap::test::code_of;

namespace {

DepthMap random_depth(std::mt19937_64& rng, int w, int h, double keep_fraction = 1.0) {
  DepthMap d(w, h);
  std::uniform_real_distribution<double> u(0.5, 5.0), keep(0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (keep(rng) < keep_fraction) d.set(x, y, u(rng));
  return d;
}

TriangleMesh two_triangles() {
  TriangleMesh m;
  // Unit right triangle (area 0.5) and a 3x larger one (area 1.5), both in z = 0.
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}, {5, 0, 0}, {2, 1, 0}};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Depth metrics

TEST(DepthMetrics, IdenticalMaps) {
  std::mt19937_64 rng(41);
  const auto gt = random_depth(rng, 20, 10);
  const auto m = depth_metrics(gt, gt);
  EXPECT_EQ(m.abs_diff, 0.0);
  EXPECT_EQ(m.sq_rel, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.delta_105, 100.0);
  EXPECT_EQ(m.delta_125, 100.0);
  EXPECT_EQ(m.count, 200u);
}

TEST(DepthMetrics, TwentyPercentOverestimate) {
  std::mt19937_64 rng(42);
  const auto gt = random_depth(rng, 20, 10);
  DepthMap pred(20, 10);
  double abs_sum = 0, sq_rel = 0, sq = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) {
      const double g = gt.depth(x, y);
      pred.set(x, y, 1.2 * g);
      const double e = 1.2 * g - g;
      abs_sum += std::abs(e);
      sq_rel += e * e / g;
      sq += e * e;
    }
  const auto m = depth_metrics(pred, gt);
  EXPECT_EQ(m.delta_105, 0.0);
  EXPECT_EQ(m.delta_125, 100.0);
  EXPECT_NEAR(m.abs_diff, abs_sum / 200, 1e-12);
  EXPECT_NEAR(m.sq_rel, sq_rel / 200, 1e-12);
  EXPECT_NEAR(m.rmse, std::sqrt(sq / 200), 1e-12);
}

TEST(DepthMetrics, RatioIsSymmetric) {
  // Underestimating by the same factor counts the same way.
  const auto gt = test::constant_depth(4, 4, 2.0);
  const auto under = test::constant_depth(4, 4, 2.0 / 1.1);
  const auto m = depth_metrics(under, gt);
  EXPECT_EQ(m.delta_105, 0.0);
  EXPECT_EQ(m.delta_125, 100.0);
}

TEST(DepthMetrics, OnlyJointlyValidPixelsCount) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 20; ++t) {
    const auto gt = random_depth(rng, 16, 12, 0.7), pred = random_depth(rng, 16, 12, 0.7);
    std::size_t both = 0;
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 16; ++x) both += gt.valid(x, y) && pred.valid(x, y);
    EXPECT_EQ(depth_metrics(pred, gt).count, both);
  }
}

TEST(DepthMetrics, MaxDepthFilter) {
  DepthMap gt(2, 1), pred(2, 1);
  gt.set(0, 0, 1.0);
  gt.set(1, 0, 6.0);
  pred.set(0, 0, 1.5);
  pred.set(1, 0, 1.0);
  const auto m = depth_metrics(pred, gt, 5.0);
  EXPECT_EQ(m.count, 1u);
  EXPECT_EQ(m.abs_diff, 0.5);
}

TEST(DepthMetrics, Errors) {
  EXPECT_EQ(code_of([] { depth_metrics(DepthMap(4, 4), test::constant_depth(4, 4, 1.0)); }), Errc::NoOverlap);
  EXPECT_EQ(code_of([] { depth_metrics(DepthMap(4, 4), DepthMap(5, 4)); }), Errc::InvalidArgument);
}

TEST(DepthMetrics, JsonRoundTrip) {
  const DepthMetrics m{0.1, 0.02, 0.3, 95.5, 99.25, 7};
  const DepthMetrics back = nlohmann::json(m).get<DepthMetrics>();
  EXPECT_EQ(back.abs_diff, m.abs_diff);
  EXPECT_EQ(back.sq_rel, m.sq_rel);
  EXPECT_EQ(back.rmse, m.rmse);
  EXPECT_EQ(back.delta_105, m.delta_105);
  EXPECT_EQ(back.delta_125, m.delta_125);
}

// ---------------------------------------------------------------------------
// Nearest neighbours and mesh metrics

TEST(KdTree, MatchesLinearScan) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = oracle::random_cloud(rng, 1 + trial * 20, 1.0);
    const auto qs = oracle::random_cloud(rng, 200, 1.5);
    const KdTree tree(pts);
    const auto brute = oracle::brute_nearest(qs, pts);
    for (std::size_t i = 0; i < qs.size(); ++i) {
      const auto hit = tree.nearest(qs[i]);
      EXPECT_EQ(std::sqrt(hit.squared_distance), brute[i]);
      EXPECT_EQ(KdTree::squared_distance(qs[i], pts[hit.index]), hit.squared_distance);
    }
  }
}

TEST(KdTree, DuplicatePointsAndEmptyTree) {
  const std::vector<Vec3> pts(50, Vec3(1, 2, 3));
  const KdTree tree(pts);
  EXPECT_EQ(tree.nearest(Vec3(1, 2, 4)).squared_distance, 1.0);
  EXPECT_TRUE(std::isinf(KdTree{}.nearest(Vec3::Zero()).squared_distance));
}

TEST(MeshMetrics, IdenticalToBruteForceOnRandomClouds) {
  std::mt19937_64 rng(45);
  std::uniform_int_distribution<std::size_t> n(1, 1000);
  std::uniform_real_distribution<double> thr(0.5, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pred = oracle::random_cloud(rng, n(rng), 0.5);
    const auto gt = oracle::random_cloud(rng, n(rng), 0.5);
    const double t = thr(rng);
    const auto lib = mesh_metrics(pred, gt, t);
    const auto ref = oracle::brute_mesh_metrics(pred, gt, t);
    EXPECT_TRUE(oracle::identical(lib, ref)) << "trial " << trial;
  }
}

TEST(MeshMetrics, IdenticalSets) {
  std::mt19937_64 rng(46);
  const auto pts = oracle::random_cloud(rng, 300, 1.0);
  const auto m = mesh_metrics(pts, pts);
  EXPECT_EQ(m.accuracy, 0.0);
  EXPECT_EQ(m.completeness, 0.0);
  EXPECT_EQ(m.precision, 100.0);
  EXPECT_EQ(m.recall, 100.0);
  EXPECT_EQ(m.f_score, 100.0);
}

TEST(MeshMetrics, ShiftedSetBeyondThreshold) {
  std::vector<Vec3> gt, pred;
  for (int i = 0; i < 10; ++i) {
    gt.emplace_back(i, 0, 0);
    pred.emplace_back(i, 0.1, 0);
  }
  const auto m = mesh_metrics(pred, gt);
  EXPECT_NEAR(m.accuracy, 10.0, 1e-9);
  EXPECT_NEAR(m.completeness, 10.0, 1e-9);
  EXPECT_NEAR(m.chamfer, 10.0, 1e-9);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.f_score, 0.0);
}

TEST(MeshMetrics, ThresholdIsStrict) {
  const std::vector<Vec3> gt{Vec3(0, 0, 0)}, pred{Vec3(0.5, 0, 0)};
  EXPECT_EQ(mesh_metrics(pred, gt, 50.0).precision, 0.0);
  EXPECT_EQ(mesh_metrics(pred, gt, 50.0001).precision, 100.0);
}

TEST(MeshMetrics, EmptySetRejected) {
  const std::vector<Vec3> some{Vec3::Zero()}, none;
  EXPECT_EQ(code_of([&] { mesh_metrics(none, some); }), Errc::EmptySet);
  EXPECT_EQ(code_of([&] { mesh_metrics(some, none); }), Errc::EmptySet);
}

TEST(MeshMetrics, JsonRoundTrip) {
  MeshMetrics m;
  m.accuracy = 1.5;
  m.recall = 88.0;
  const MeshMetrics back = nlohmann::json(m).get<MeshMetrics>();
  EXPECT_TRUE(oracle::identical(m, back));
}

// ---------------------------------------------------------------------------
// Sampling, pruning, alignment

TEST(SampleMesh, AreaWeightedAndOnSurface) {
  const auto mesh = two_triangles();
  const auto samples = sample_mesh_with_faces(mesh, 100000, 7);
  ASSERT_EQ(samples.size(), 100000u);
  std::size_t first = 0;
  for (const auto& s : samples) {
    EXPECT_EQ(s.point.z(), 0.0);
    if (s.triangle == 0) {
      ++first;
      EXPECT_GE(s.point.x(), -1e-12);
      EXPECT_GE(s.point.y(), -1e-12);
      EXPECT_LE(s.point.x() + s.point.y(), 1.0 + 1e-12);
    } else {
      EXPECT_GE(s.point.x(), 2.0 - 1e-12);
      EXPECT_LE(s.point.y(), 1.0 + 1e-12);
    }
  }
  EXPECT_NEAR(first / 100000.0, 0.25, 0.01);
}

TEST(SampleMesh, UniformWithinTriangle) {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  const auto pts = sample_mesh(m, 200000, 8);
  // Centroid of a uniform density is the triangle centroid.
  Vec3 mean = Vec3::Zero();
  std::size_t lower_corner = 0;
  for (const auto& p : pts) {
    mean += p;
    lower_corner += p.x() < 0.5 && p.y() < 0.5;
  }
  mean /= pts.size();
  EXPECT_NEAR(mean.x(), 1.0 / 3.0, 0.005);
  EXPECT_NEAR(mean.y(), 1.0 / 3.0, 0.005);
  // The square [0, .5)^2 covers half the triangle's area.
  EXPECT_NEAR(lower_corner / 200000.0, 0.5, 0.01);
}

TEST(SampleMesh, SeedDeterminesSamples) {
  const auto mesh = two_triangles();
  EXPECT_EQ(sample_mesh(mesh, 100, 3), sample_mesh(mesh, 100, 3));
  EXPECT_NE(sample_mesh(mesh, 100, 3), sample_mesh(mesh, 100, 4));
}

TEST(SampleMesh, EmptyMeshRejected) {
  EXPECT_EQ(code_of([] { sample_mesh(TriangleMesh{}, 10, 0); }), Errc::EmptyMesh);
  TriangleMesh flat;
  flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  flat.triangles = {{0, 1, 2}};
  EXPECT_EQ(code_of([&] { sample_mesh(flat, 10, 0); }), Errc::EmptyMesh);
}

TEST(PruneToFrusta, KeepsVisiblePointsOnly) {
  const auto intr = test::intrinsics_500();
  const std::vector<RigidPose> poses{RigidPose{}};
  const std::vector<Vec3> pts{Vec3(0, 0, 2), Vec3(0, 0, -2), Vec3(0, 0, 9), Vec3(5, 0, 1)};
  const auto kept = prune_to_frusta(pts, poses, intr, 5.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], Vec3(0, 0, 2));
  const std::vector<RigidPose> two{RigidPose{}, test::translation(0, 0, -6)};
  EXPECT_EQ(prune_to_frusta(pts, two, intr, 5.0).size(), 2u);  // (0,0,-2) is 4 m ahead of the second camera
}

TEST(AlignSe3, RecoversRigidTransform) {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const RigidPose truth = test::random_pose(rng, 2.0);
    const auto pred = oracle::random_cloud(rng, 50, 1.0);
    std::vector<Vec3> gt;
    for (const auto& p : pred) gt.push_back(truth.apply(p));
    const RigidPose est = align_se3(pred, gt);
    EXPECT_LT((est.rotation - truth.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((est.translation - truth.translation).norm(), 1e-9);
    EXPECT_LT(alignment_rmse(pred, gt, est), 1e-9);
    EXPECT_NEAR(est.rotation.determinant(), 1.0, 1e-12);
  }
}

TEST(AlignSe3, PlanarPointsStayProperRotation) {
  std::mt19937_64 rng(48);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec3> pred, gt;
  const RigidPose truth{test::rot_z(0.7), Vec3(0.1, 0.2, 0.3)};
  for (int i = 0; i < 30; ++i) {
    pred.emplace_back(u(rng), u(rng), 0.0);
    gt.push_back(truth.apply(pred.back()));
  }
  const RigidPose est = align_se3(pred, gt);
  EXPECT_NEAR(est.rotation.determinant(), 1.0, 1e-12);
  EXPECT_LT(alignment_rmse(pred, gt, est), 1e-9);
}

TEST(AlignSe3, DegenerateInputsRejected) {
  const std::vector<Vec3> two{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  EXPECT_EQ(code_of([&] { align_se3(two, two); }), Errc::DegenerateConfiguration);
  const std::vector<Vec3> line{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  EXPECT_EQ(code_of([&] { align_se3(line, line); }), Errc::DegenerateConfiguration);
  const std::vector<Vec3> three{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  EXPECT_EQ(code_of([&] { align_se3(three, two); }), Errc::InvalidArgument);
}

TEST(AlignSe3, WithCorrespondences) {
  std::mt19937_64 rng(49);
  const RigidPose truth = test::random_pose(rng);
  const auto pred = oracle::random_cloud(rng, 20, 1.0);
  std::vector<Vec3> gt(pred.size());
  std::vector<std::pair<std::size_t, std::size_t>> corr;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    gt[pred.size() - 1 - i] = truth.apply(pred[i]);
    corr.push_back({i, pred.size() - 1 - i});
  }
  const RigidPose est = align_se3(pred, gt, corr);
  EXPECT_LT((est.translation - truth.translation).norm(), 1e-9);
}
