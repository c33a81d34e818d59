#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace smap;
using smap::test::intrinsics_500;

using smap::test::code_of;

TEST(Project, PointOnPrincipalAxisLandsOnPrincipalPoint) {
  const auto p = project(Vec3(0, 0, 2), intrinsics_500());
  EXPECT_EQ(p.pixel, Vec2(320, 240));
  EXPECT_EQ(p.depth, 2.0);
}

TEST(Project, OffAxisPoint) {
  // 500 * 1 / 2 + 320
  const auto p = project(Vec3(1, 0, 2), intrinsics_500());
  EXPECT_DOUBLE_EQ(p.pixel.x(), 570.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 240.0);
  EXPECT_EQ(p.depth, 2.0);
}

TEST(Project, BehindCameraThrows) {
  EXPECT_EQ(code_of([] { project(Vec3(0, 0, -1), intrinsics_500()); }), Errc::BehindCamera);
  EXPECT_EQ(code_of([] { project(Vec3(0, 0, 1e-7), intrinsics_500()); }), Errc::BehindCamera);
}

TEST(Unproject, PrincipalAxis) { EXPECT_EQ(unproject(Vec2(320, 240), 2.0, intrinsics_500()), Vec3(0, 0, 2)); }

TEST(Unproject, InvertsOffAxisProjection) {
  const Vec3 p = unproject(Vec2(570, 240), 2.0, intrinsics_500());
  EXPECT_NEAR(p.x(), 1.0, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_EQ(p.z(), 2.0);
}

TEST(Unproject, ZeroDepthThrows) {
  EXPECT_EQ(code_of([] { unproject(Vec2(100, 100), 0.0, intrinsics_500()); }), Errc::NonPositiveDepth);
  EXPECT_EQ(code_of([] { unproject(Vec2(100, 100), -1.0, intrinsics_500()); }), Errc::NonPositiveDepth);
}

TEST(Unproject, RoundTripOnRandomPixels) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0, 639), uy(0, 479), ud(0.05, 20.0);
  const auto k = intrinsics_500();
  for (int i = 0; i < 10000; ++i) {
    const Vec2 px(ux(rng), uy(rng));
    const double d = ud(rng);
    const auto back = project(unproject(px, d, k), k);
    EXPECT_NEAR((back.pixel - px).norm(), 0.0, 1e-9);
    EXPECT_NEAR(back.depth, d, 1e-9);
  }
}

TEST(Intrinsics, ValidateRejectsBadValues) {
  EXPECT_NO_THROW(intrinsics_500().validate());
  CameraIntrinsics k = intrinsics_500();
  k.fx = 0;
  EXPECT_EQ(code_of([&] { k.validate(); }), Errc::InvalidIntrinsics);
  k = intrinsics_500();
  k.cx = 640;
  EXPECT_EQ(code_of([&] { k.validate(); }), Errc::InvalidIntrinsics);
  k = intrinsics_500();
  k.cy = 0;
  EXPECT_EQ(code_of([&] { k.validate(); }), Errc::InvalidIntrinsics);
}

TEST(RelativePose, SelfIsIdentity) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const RigidPose t = test::random_pose(rng, 5.0);
    const RigidPose r = relative_pose(t, t);
    EXPECT_LT((r.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(r.translation.norm(), 1e-12);
  }
}

TEST(RelativePose, PureTranslations) {
  const RigidPose r = relative_pose(test::translation(1, 0, 0), test::translation(3, 0, 0));
  EXPECT_DOUBLE_EQ(r.translation.norm(), 2.0);
  // A point at the reference origin sits 2 m to the left of the source camera.
  EXPECT_EQ(r.apply(Vec3::Zero()), Vec3(-2, 0, 0));
}

TEST(RelativePose, MapsReferenceFrameToSourceFrame) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const RigidPose a = test::random_pose(rng), b = test::random_pose(rng);
    const Vec3 p_ref(0.3, -0.2, 1.7);
    const Vec3 world = a.apply(p_ref);
    const Vec3 expect = b.rotation.transpose() * (world - b.translation);
    EXPECT_LT((relative_pose(a, b).apply(p_ref) - expect).norm(), 1e-12);
  }
}

TEST(RelativePose, ReflectionRejected) {
  RigidPose bad;
  bad.rotation = Mat3::Identity();
  bad.rotation(2, 2) = -1.0;  // det -1
  EXPECT_EQ(code_of([&] { relative_pose(bad, RigidPose{}); }), Errc::InvalidRotation);
  EXPECT_EQ(code_of([&] { relative_pose(RigidPose{}, bad); }), Errc::InvalidRotation);
}

TEST(RelativePose, ComposedWithReverseIsIdentity) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const RigidPose a = test::random_pose(rng, 3.0), b = test::random_pose(rng, 3.0);
    const RigidPose c = relative_pose(a, b) * relative_pose(b, a);
    EXPECT_LT((c.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(c.translation.norm(), 1e-9);
  }
}

TEST(WarpPixel, IdentityLeavesPixelInPlace) {
  const auto k = intrinsics_500();
  for (double d : {0.3, 1.0, 2.5, 40.0}) {
    const auto w = warp_pixel(Vec2(123.25, 77.5), d, k, RigidPose{});
    ASSERT_TRUE(w);
    EXPECT_NEAR(w->x(), 123.25, 1e-12);
    EXPECT_NEAR(w->y(), 77.5, 1e-12);
  }
}

TEST(WarpPixel, StereoDisparity) {
  const auto k = intrinsics_500();
  const double b = 0.1;
  // Source camera displaced +b along x: points move left by fx * b / d.
  const RigidPose rel = relative_pose(RigidPose{}, test::translation(b, 0, 0));
  for (double d : {0.5, 1.0, 2.0, 4.0}) {
    const auto w = warp_pixel(Vec2(320, 240), d, k, rel);
    ASSERT_TRUE(w);
    EXPECT_NEAR(320.0 - w->x(), 500.0 * b / d, 1e-9);
    EXPECT_NEAR(w->y(), 240.0, 1e-12);
  }
}

TEST(WarpPixel, BehindSourceIsOutOfView) {
  const auto k = intrinsics_500();
  // Source camera 3 m ahead of the reference, looking the same way.
  const RigidPose rel = relative_pose(RigidPose{}, test::translation(0, 0, 3));
  EXPECT_FALSE(warp_pixel(Vec2(320, 240), 2.0, k, rel));
  EXPECT_TRUE(warp_pixel(Vec2(320, 240), 4.0, k, rel));
}

TEST(WarpPixel, OffImageIsOutOfView) {
  const auto k = intrinsics_500();
  const RigidPose rel = relative_pose(RigidPose{}, test::translation(1.0, 0, 0));
  EXPECT_FALSE(warp_pixel(Vec2(10, 240), 0.5, k, rel));
}

TEST(WarpPixel, DisparityDecreasesWithDepth) {
  const auto k = intrinsics_500();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tx(0.02, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidPose rel = relative_pose(RigidPose{}, test::translation(tx(rng), 0, 0));
    double last = std::numeric_limits<double>::infinity();
    for (double d = 0.5; d < 20.0; d *= 1.1) {
      const auto w = warp_pixel(Vec2(400, 200), d, k, rel);
      ASSERT_TRUE(w);
      const double disparity = 400.0 - w->x();
      EXPECT_LT(disparity, last);
      last = disparity;
    }
  }
}

TEST(RigidPose, QuaternionRoundTrip) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const RigidPose p = test::random_pose(rng);
    const auto q = p.quaternion();
    const RigidPose back = RigidPose::from_quaternion(q.x(), q.y(), q.z(), q.w(), p.translation);
    EXPECT_LT((back.rotation - p.rotation).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(back.is_valid());
  }
  EXPECT_EQ(code_of([] { RigidPose::from_quaternion(0, 0, 0, 0, Vec3::Zero()); }), Errc::InvalidRotation);
}

TEST(RigidPose, IsValidDetectsShear) {
  RigidPose p;
  p.rotation(0, 1) = 1e-6;
  EXPECT_FALSE(p.is_valid());
  EXPECT_TRUE(RigidPose{}.is_valid());
}

TEST(LookAt, ForwardPointsAtTarget) {
  const RigidPose p = look_at(Vec3(1, 2, 3), Vec3(4, 6, 3));
  EXPECT_TRUE(p.is_valid());
  EXPECT_LT((p.rotation.col(2) - Vec3(0.6, 0.8, 0.0)).norm(), 1e-12);
  // Image y (down) points against world up.
  EXPECT_LT(p.rotation.col(1).z(), 0.0);
}

TEST(DepthMap, SetRejectsNonPositiveAndNonFinite) {
  DepthMap d(3, 2);
  d.set(0, 0, 1.5);
  d.set(1, 0, 0.0);
  d.set(2, 0, -1.0);
  d.set(0, 1, std::numeric_limits<double>::quiet_NaN());
  d.set(1, 1, std::numeric_limits<double>::infinity());
  EXPECT_TRUE(d.valid(0, 0));
  EXPECT_EQ(d.valid_count(), 1u);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      if (!d.valid(x, y)) EXPECT_EQ(d.depth(x, y), 0.0);
}

TEST(Image, ValidityChecksRange) {
  Image img(2, 2, 0.5f);
  EXPECT_TRUE(image_is_valid(img));
  img(1, 1) = 1.5f;
  EXPECT_FALSE(image_is_valid(img));
  img(1, 1) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(image_is_valid(img));
}

TEST(SampleBilinear, InterpolatesLinearRamp) {
  Image img(4, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) img(x, y) = 0.1f * x + 0.2f * y;
  EXPECT_NEAR(sample_bilinear(img, 1.25, 0.5), 0.1 * 1.25 + 0.2 * 0.5, 1e-6);
  EXPECT_NEAR(sample_bilinear(img, 3.0, 2.0), 0.1 * 3 + 0.2 * 2, 1e-6);
}

TEST(Raster, NegativeSizeThrows) { EXPECT_THROW(Raster<float>(-1, 2), Error); }
