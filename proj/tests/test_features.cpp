#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dsrf/core/error.hpp"
#include "dsrf/features/match.hpp"
#include "dsrf/features/sift.hpp"
#include "test_util.hpp"

namespace dsrf::features {
namespace {

Image blob(int size, double cx, double cy, double sigma) {
  Image img(1, size, size, 0.0f);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      img.at(0, y, x) = static_cast<float>(std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)));
    }
  }
  return img;
}

Image rotate90(const Image& img) {
  Image out(1, img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(0, x, img.height() - 1 - y) = img.at(0, y, x);
  }
  return out;
}

Descriptor random_unit_descriptor(std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  Descriptor d;
  float norm = 0.0f;
  for (float& v : d) {
    v = std::abs(n(rng));
    norm += v * v;
  }
  for (float& v : d) v /= std::sqrt(norm);
  return d;
}

TEST(DetectKeypoints, ConstantImageHasNone) {
  EXPECT_TRUE(detect_keypoints(Image(1, 64, 64, 0.5f)).empty());
}

TEST(DetectKeypoints, RejectsSmallOrColorImages) {
  EXPECT_THROW(detect_keypoints(Image(1, 31, 64)), InvalidInput);
  EXPECT_THROW(detect_keypoints(Image(3, 64, 64)), InvalidInput);
}

TEST(DetectKeypoints, FindsGaussianBlobCenter) {
  const auto kps = detect_keypoints(blob(128, 64.0, 64.0, 3.0));
  ASSERT_FALSE(kps.empty());
  double best = 1e9;
  for (const auto& k : kps) best = std::min(best, std::hypot(k.x - 64.0, k.y - 64.0));
  EXPECT_LT(best, 2.0);
}

TEST(DetectKeypoints, RotationKeepsCountWithinTenPercent) {
  const Image img = test::texture_image(1, 160, 160, 21, 2.0);
  const double a = detect_keypoints(img).size();
  const double b = detect_keypoints(rotate90(img)).size();
  ASSERT_GT(a, 20);
  EXPECT_LT(std::abs(a - b) / a, 0.10);
}

TEST(DetectKeypoints, KeypointsInsideImageAndOrdered) {
  const Image img = test::texture_image(1, 96, 120, 4);
  const auto kps = detect_keypoints(img);
  ASSERT_FALSE(kps.empty());
  for (std::size_t i = 0; i < kps.size(); ++i) {
    EXPECT_GE(kps[i].x, 0.0);
    EXPECT_LT(kps[i].x, 120.0);
    EXPECT_GE(kps[i].y, 0.0);
    EXPECT_LT(kps[i].y, 96.0);
    EXPECT_GT(kps[i].scale, 0.0);
    if (i > 0) EXPECT_GE(kps[i - 1].response, kps[i].response);
  }
}

TEST(DetectKeypoints, Deterministic) {
  const Image img = test::texture_image(1, 100, 100, 8);
  const auto a = detect_and_describe(img);
  const auto b = detect_and_describe(img);
  ASSERT_EQ(a.keypoints.size(), b.keypoints.size());
  for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
    EXPECT_EQ(a.keypoints[i].x, b.keypoints[i].x);
    EXPECT_EQ(a.keypoints[i].y, b.keypoints[i].y);
    EXPECT_EQ(a.keypoints[i].orientation, b.keypoints[i].orientation);
    EXPECT_EQ(a.descriptors[i], b.descriptors[i]);
  }
}

TEST(DetectKeypoints, IntegerShiftIsEquivariant) {
  const Image big = test::texture_image(1, 140, 140, 13, 2.0);
  const int dx = 7, dy = 4;
  const Image a = crop(big, {10, 10, 110, 110});
  const Image b = crop(big, {10 - dx, 10 - dy, 110, 110});
  const auto da = detect_and_describe(a);
  const auto db = detect_and_describe(b);
  const auto matches = match_descriptors(da.descriptors, db.descriptors);
  int checked = 0;
  for (const auto& m : matches) {
    const auto& ka = da.keypoints[m.src];
    const auto& kb = db.keypoints[m.dst];
    if (ka.x < 20 || ka.y < 20 || ka.x > 90 || ka.y > 90) continue;
    EXPECT_NEAR(kb.x - ka.x, dx, 0.5);
    EXPECT_NEAR(kb.y - ka.y, dy, 0.5);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(ComputeDescriptors, UnitNorm) {
  const auto d = detect_and_describe(test::texture_image(1, 128, 128, 3));
  ASSERT_FALSE(d.descriptors.empty());
  for (const auto& desc : d.descriptors) {
    double n = 0.0;
    for (float v : desc) {
      EXPECT_GE(v, 0.0f);
      n += static_cast<double>(v) * v;
    }
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
}

TEST(ComputeDescriptors, BrightnessShiftBarelyChangesDescriptors) {
  const Image img = test::texture_image(1, 128, 128, 5);
  // Compress to [0, 0.85] so the +0.1 copy stays inside [0, 1] without clipping.
  Image base = img;
  for (float& v : base.data()) v *= 0.85f;
  Image shifted = base;
  for (float& v : shifted.data()) v += 0.1f;
  const auto kps = detect_keypoints(base);
  const auto a = compute_descriptors(base, kps);
  const auto b = compute_descriptors(shifted, kps);
  ASSERT_EQ(a.descriptors.size(), b.descriptors.size());
  ASSERT_FALSE(a.descriptors.empty());
  for (std::size_t i = 0; i < a.descriptors.size(); ++i) {
    EXPECT_LT(descriptor_distance(a.descriptors[i], b.descriptors[i]), 0.1);
  }
}

TEST(ComputeDescriptors, BorderKeypointsAreSkippedAndReported) {
  const Image img = test::texture_image(1, 64, 64, 6);
  std::vector<Keypoint> kps(2);
  kps[0] = {32.0, 32.0, 2.0, 0.0, 1.0, 0, 1.0};
  kps[1] = {0.5, 0.5, 8.0, 0.0, 1.0, 0, 1.0};
  const auto d = compute_descriptors(img, kps);
  EXPECT_EQ(d.descriptors.size(), 1u);
  ASSERT_EQ(d.skipped.size(), 1u);
  EXPECT_EQ(d.skipped[0], 1u);
}

TEST(MatchDescriptors, SelfMatchIsIdentityWithZeroDistance) {
  std::mt19937_64 rng(1);
  std::vector<Descriptor> d(60);
  for (auto& v : d) v = random_unit_descriptor(rng);
  const auto m = match_descriptors(d, d, 0.75);
  ASSERT_EQ(m.size(), d.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].src, i);
    EXPECT_EQ(m[i].dst, i);
    EXPECT_EQ(m[i].distance, 0.0);
  }
}

TEST(MatchDescriptors, DisjointRandomSetsRarelyMatch) {
  std::mt19937_64 rng(2);
  std::vector<Descriptor> a(200), b(200);
  for (auto& v : a) v = random_unit_descriptor(rng);
  for (auto& v : b) v = random_unit_descriptor(rng);
  EXPECT_LT(match_descriptors(a, b, 0.75).size(), 10u);
}

TEST(MatchDescriptors, RecoversShufflePermutation) {
  std::mt19937_64 rng(3);
  std::vector<Descriptor> a(80);
  for (auto& v : a) v = random_unit_descriptor(rng);
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Descriptor> b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) b[perm[i]] = a[i];
  const auto m = match_descriptors(a, b);
  ASSERT_EQ(m.size(), a.size());
  for (const auto& x : m) EXPECT_EQ(x.dst, perm[x.src]);
}

TEST(MatchDescriptors, EmptyInputsGiveEmptyOutput) {
  std::vector<Descriptor> none;
  std::vector<Descriptor> one(1);
  EXPECT_TRUE(match_descriptors(none, one).empty());
  EXPECT_TRUE(match_descriptors(one, none).empty());
}

TEST(MatchDescriptors, RejectsBadRatio) {
  std::vector<Descriptor> one(1);
  EXPECT_THROW(match_descriptors(one, one, 0.0), InvalidInput);
  EXPECT_THROW(match_descriptors(one, one, 1.0), InvalidInput);
}

TEST(MatchDescriptors, DistancesNonNegative) {
  const auto da = detect_and_describe(test::texture_image(1, 96, 96, 30));
  const auto db = detect_and_describe(test::texture_image(1, 96, 96, 31));
  for (const auto& m : match_descriptors(da.descriptors, db.descriptors)) EXPECT_GE(m.distance, 0.0);
}

TEST(KeypointCsv, HasHeaderAndOneRowPerKeypoint) {
  std::vector<Keypoint> kps(3);
  const std::string csv = keypoints_to_csv(kps);
  EXPECT_EQ(csv.rfind("x,y,scale,orientation,response", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

}  // namespace
}  // namespace dsrf::features
