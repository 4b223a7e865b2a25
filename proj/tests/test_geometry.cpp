#include <gtest/gtest.h>

#include <cmath>

#include "dsrf/core/error.hpp"
#include "dsrf/geometry/homography.hpp"
#include "dsrf/geometry/ransac.hpp"
#include "dsrf/geometry/warp.hpp"
#include "homography_problems.hpp"
#include "test_util.hpp"

namespace dsrf::geometry {
namespace {

Homography similarity(double deg, double s, double tx, double ty) {
  const double t = deg * 3.141592653589793 / 180.0;
  return Homography({s * std::cos(t), -s * std::sin(t), tx, s * std::sin(t), s * std::cos(t), ty, 0, 0, 1});
}

std::vector<Correspondence> map_points(const Homography& h, const std::vector<Point2>& pts) {
  std::vector<Correspondence> c;
  for (const auto& p : pts) c.push_back({p, h.apply(p)});
  return c;
}

TEST(Homography, IdentityAndScaleAction) {
  const Point2 p = apply_homography(Homography::identity(), {10, 20});
  EXPECT_EQ(p.x, 10);
  EXPECT_EQ(p.y, 20);
  const Point2 q = Homography::scaling(2.5).apply({4, -2});
  EXPECT_DOUBLE_EQ(q.x, 10);
  EXPECT_DOUBLE_EQ(q.y, -5);
}

TEST(Homography, CompositionAppliesRightFactorFirst) {
  const Homography a = similarity(30, 1.3, 4, -1);
  const Homography b({1.1, 0.2, 3, -0.1, 0.9, 7, 1e-3, -2e-3, 1});
  for (const Point2 p : {Point2{0, 0}, Point2{13, -4}, Point2{100, 50}}) {
    const Point2 direct = (a * b).apply(p);
    const Point2 chained = a.apply(b.apply(p));
    EXPECT_NEAR(direct.x, chained.x, 1e-9);
    EXPECT_NEAR(direct.y, chained.y, 1e-9);
  }
}

TEST(Homography, NormalizedAndInvertible) {
  const Homography h({2, 0, 4, 0, 2, 6, 0, 0, 2});
  EXPECT_DOUBLE_EQ(h(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
  const Homography r = h * h.inverse();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(r(i, j), i == j ? 1.0 : 0.0, 1e-12);
  }
  EXPECT_THROW(Homography({1, 2, 3, 2, 4, 6, 0, 0, 1}).inverse(), InvalidInput);
}

TEST(Homography, PointAtInfinityThrows) {
  const Homography h({1, 0, 0, 0, 1, 0, 1, 0, 0});
  EXPECT_THROW(h.apply({0, 5}), PointAtInfinity);
}

TEST(Dlt, FourIdentityPoints) {
  const auto c = map_points(Homography::identity(), {{0, 0}, {10, 0}, {10, 10}, {0, 10}});
  const Homography h = estimate_homography_dlt(c);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(h(i, j), i == j ? 1.0 : 0.0, 1e-10);
  }
}

TEST(Dlt, RecoversConstructedSimilarity) {
  const Homography truth = similarity(10, 1.2, 5, -3);
  const std::vector<Point2> pts{{0, 0}, {100, 0}, {100, 80}, {0, 80}, {37, 55}, {71, 12}};
  const Homography h = estimate_homography_dlt(map_points(truth, pts));
  EXPECT_LT(max_transfer_difference(h, truth, pts), 1e-8);
}

TEST(Dlt, CollinearSetFails) {
  const std::vector<Correspondence> c{{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}, {{5, 0}, {5, 1}}};
  EXPECT_THROW(estimate_homography_dlt(c), EstimationFailure);
}

TEST(Dlt, TooFewPointsFail) {
  const auto c = map_points(Homography::identity(), {{0, 0}, {10, 0}, {10, 10}});
  EXPECT_THROW(estimate_homography_dlt(c), EstimationFailure);
}

TEST(Dlt, ScalingCoordinatesConjugatesSolution) {
  const Homography truth({1.05, 0.03, 2, -0.02, 0.97, -1, 1e-3, 5e-4, 1});
  std::vector<Point2> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({1.0 * (i * 37 % 11), 1.0 * (i * 53 % 7)});
  const auto c = map_points(truth, pts);
  std::vector<Correspondence> scaled;
  for (const auto& x : c) scaled.push_back({{x.src.x * 100, x.src.y * 100}, {x.dst.x * 100, x.dst.y * 100}});
  const Homography S = Homography::scaling(100);
  const Homography expected = S * estimate_homography_dlt(c) * S.inverse();
  const Homography got = estimate_homography_dlt(scaled);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double scale = (i == 2 && j < 2) ? 1e-2 : (j == 2 && i < 2 ? 100.0 : 1.0);
      EXPECT_NEAR(got(i, j) / scale, expected(i, j) / scale, 1e-8);
    }
  }
}

TEST(Ransac, NoiselessInputRecoversExactly) {
  auto p = test::make_homography_problem(5, 40, 0.0, 0.0);
  const auto r = ransac_homography(p.corr, {2.0, 2000, 0.99, 1});
  EXPECT_EQ(r.n_inliers, 40);
  for (bool b : r.inliers) EXPECT_TRUE(b);
  EXPECT_LT(test::mean_recovery_error(p, r.h), 1e-6);
}

TEST(Ransac, HalfOutliersWithNoise) {
  const auto p = test::make_homography_problem(17);
  const auto r = ransac_homography(p.corr, {2.0, 2000, 0.99, 3});
  EXPECT_LT(test::mean_recovery_error(p, r.h), 0.5);
  int agree = 0;
  for (std::size_t i = 0; i < p.corr.size(); ++i) agree += r.inliers[i] == p.is_inlier[i];
  EXPECT_GE(agree, 95);
}

TEST(Ransac, FourExactPointsGiveDltSolution) {
  const auto c = map_points(similarity(5, 0.9, 3, 4), {{0, 0}, {50, 0}, {50, 40}, {0, 40}});
  const auto r = ransac_homography(c, {1.0, 100, 0.99, 0});
  const Homography d = estimate_homography_dlt(c);
  EXPECT_EQ(r.n_inliers, 4);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(r.h.matrix()[i], d.matrix()[i], 1e-9);
}

TEST(Ransac, DeterministicForSeed) {
  const auto p = test::make_homography_problem(23);
  const auto a = ransac_homography(p.corr, {2.0, 2000, 0.99, 9});
  const auto b = ransac_homography(p.corr, {2.0, 2000, 0.99, 9});
  EXPECT_EQ(a.h.matrix(), b.h.matrix());
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Ransac, InlierCountMonotoneInThreshold) {
  const auto p = test::make_homography_problem(31, 100, 0.5, 1.0);
  int prev = 0;
  for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const auto r = ransac_homography(p.corr, {t, 2000, 0.99, 4});
    EXPECT_GE(r.n_inliers, prev) << "threshold " << t;
    prev = r.n_inliers;
  }
}

TEST(Ransac, PureNoiseFails) {
  std::vector<Correspondence> c{{{0, 0}, {5, 5}}, {{1, 1}, {3, 9}}, {{2, 2}, {1, 0}}};
  EXPECT_THROW(ransac_homography(c), EstimationFailure);
}

TEST(Warp, IdentityIsExact) {
  const Image img = test::noise_image(3, 20, 24, 1);
  const auto w = warp_image(img, Homography::identity(), 20, 24);
  EXPECT_EQ(w.image, img);
  EXPECT_DOUBLE_EQ(w.coverage, 1.0);
}

TEST(Warp, IntegerTranslationShiftsRamp) {
  Image ramp(1, 40, 50);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 50; ++x) ramp.at(0, y, x) = static_cast<float>(0.01 * x + 0.005 * y);
  }
  const auto w = warp_image(ramp, Homography::translation(3, 7), 40, 50);
  for (int y = 7; y < 40; ++y) {
    for (int x = 3; x < 50; ++x) EXPECT_NEAR(w.image.at(0, y, x), ramp.at(0, y - 7, x - 3), 1e-6);
  }
  EXPECT_EQ(w.mask.at(0, 0, 0), 0.0f);
  EXPECT_LT(w.coverage, 1.0);
}

TEST(Warp, RoundTripPsnrAbove40dB) {
  const Image img = test::smooth_image(1, 100, 100, 2);
  const Homography h({1.02, 0.03, 1.5, -0.02, 0.99, -2.2, 1e-4, -5e-5, 1});
  const auto fwd = warp_image(img, h, 100, 100);
  const auto back = warp_image(fwd.image, h.inverse(), 100, 100);
  double se = 0.0;
  int n = 0;
  for (int y = 10; y < 90; ++y) {
    for (int x = 10; x < 90; ++x) {
      const double d = back.image.at(0, y, x) - img.at(0, y, x);
      se += d * d;
      ++n;
    }
  }
  EXPECT_GT(10 * std::log10(1.0 / (se / n)), 40.0);
}

TEST(Warp, ConstantPreservedWhereCovered) {
  const Image img(2, 30, 30, 0.7f);
  const auto w = warp_image(img, similarity(12, 1.1, 4, -3), 30, 30);
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 30; ++x) {
        if (w.mask.at(0, y, x) > 0) {
          EXPECT_FLOAT_EQ(w.image.at(c, y, x), 0.7f);
        } else {
          EXPECT_EQ(w.image.at(c, y, x), 0.0f);
        }
      }
    }
  }
}

TEST(Warp, SingularHomographyThrows) {
  EXPECT_THROW(warp_image(Image(1, 4, 4), Homography({1, 2, 3, 2, 4, 6, 0, 0, 1}), 4, 4), InvalidInput);
}

}  // namespace
}  // namespace dsrf::geometry
