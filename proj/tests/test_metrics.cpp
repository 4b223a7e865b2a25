#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsrf/core/error.hpp"
#include "dsrf/metrics/metrics.hpp"
#include "test_util.hpp"

namespace dsrf::metrics {
namespace {

Image gray(int h, int w, float v) { return Image(1, h, w, v); }

TEST(Psnr, IdenticalImagesAreExactMatch) {
  const Image a = test::noise_image(3, 40, 40, 1);
  const auto r = psnr_y(a, a);
  EXPECT_TRUE(r.exact_match);
  EXPECT_EQ(r.db, kPsnrCap);
}

TEST(Psnr, UniformOneLevelDifference) {
  const Image a = gray(64, 64, 100.0f / 255.0f);
  const Image b = gray(64, 64, 101.0f / 255.0f);
  EXPECT_NEAR(psnr_y(a, b).db, 20.0 * std::log10(255.0), 1e-3);
  EXPECT_NEAR(psnr_y(a, b).db, 48.1308, 1e-3);
}

TEST(Psnr, GaussianNoiseSigmaFive) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 5.0 / 255.0);
  const Image ref = gray(256, 256, 128.0f / 255.0f);
  Image pred = ref;
  for (float& v : pred.data()) v = static_cast<float>(v + n(rng));
  EXPECT_NEAR(psnr_y(pred, ref).db, 34.15, 0.1);
}

TEST(Psnr, ShaveInvariance) {
  const Image a = test::noise_image(3, 50, 60, 2);
  const Image b = test::noise_image(3, 50, 60, 3);
  const double full = psnr_y(a, b, {6}).db;
  const Rect r{2, 2, 56, 46};
  EXPECT_NEAR(psnr_y(crop(a, r), crop(b, r), {4}).db, full, 1e-9);
}

TEST(Psnr, ShapeMismatchThrows) {
  EXPECT_THROW(psnr_y(Image(3, 20, 20), Image(3, 20, 21)), InvalidInput);
  EXPECT_THROW(psnr_y(Image(1, 12, 12), Image(1, 12, 12), {6}), InvalidInput);
}

TEST(Ssim, SelfSimilarityIsOne) {
  const Image a = test::texture_image(3, 48, 48, 4);
  EXPECT_NEAR(ssim_y(a, a), 1.0, 1e-9);
}

TEST(Ssim, InvertedBinaryPatternIsNegative) {
  Image a(1, 40, 40);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) a.at(0, y, x) = ((x / 3 + y / 5) % 2) ? 235.0f / 255.0f : 16.0f / 255.0f;
  }
  Image b = a;
  for (float& v : b.data()) v = 251.0f / 255.0f - v;
  EXPECT_LT(ssim_y(b, a), 0.0);
}

TEST(Ssim, SmallNoiseOnTexture) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0 / 255.0);
  const Image a = test::texture_image(1, 96, 96, 6, 1.0);
  Image b = a;
  for (float& v : b.data()) v = static_cast<float>(v + n(rng));
  EXPECT_GT(ssim_y(b, a), 0.98);
}

TEST(Ssim, Symmetric) {
  const Image a = test::texture_image(3, 40, 44, 7);
  const Image b = test::noise_image(3, 40, 44, 8);
  EXPECT_NEAR(ssim_y(a, b), ssim_y(b, a), 1e-12);
}

TEST(Ssim, InRangeAndTooSmallThrows) {
  const double s = ssim_y(test::noise_image(1, 30, 30, 9), test::noise_image(1, 30, 30, 10));
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
  EXPECT_THROW(ssim_y(Image(1, 22, 22), Image(1, 22, 22)), InvalidInput);
}

TEST(Ncc, SelfAndNegated) {
  const Image a = test::noise_image(1, 30, 30, 11);
  Image b = a;
  for (float& v : b.data()) v = 0.7f - v;
  EXPECT_NEAR(ncc(a, a), 1.0, 1e-12);
  EXPECT_NEAR(ncc(a, b), -1.0, 1e-6);
}

TEST(Ncc, IndependentNoiseIsUncorrelated) {
  int below = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const Image a = test::noise_image(1, 180, 180, 1000 + 2 * t);
    const Image b = test::noise_image(1, 180, 180, 1001 + 2 * t);
    below += std::abs(ncc(a, b)) < 0.05;
  }
  EXPECT_GE(below, trials * 99 / 100);
}

TEST(Ncc, AffineIntensityInvariance) {
  const Image a = test::texture_image(1, 40, 40, 12);
  const Image b = test::texture_image(1, 40, 40, 13);
  Image a2 = a;
  for (float& v : a2.data()) v = 0.3f * v + 0.2f;
  EXPECT_NEAR(ncc(a2, b), ncc(a, b), 1e-6);
}

TEST(Ncc, ZeroVarianceThrows) {
  EXPECT_THROW(ncc(gray(10, 10, 0.5f), test::noise_image(1, 10, 10, 1)), UndefinedCorrelation);
}

}  // namespace
}  // namespace dsrf::metrics
