#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dsrf/analysis/fft.hpp"
#include "dsrf/analysis/kernel.hpp"
#include "dsrf/analysis/psd.hpp"
#include "dsrf/core/error.hpp"
#include "dsrf/imgcore/filter.hpp"
#include "test_util.hpp"

namespace dsrf::analysis {
namespace {

std::vector<KernelPair> gaussian_pairs(double sigma, int count, int size, std::uint64_t seed) {
  std::vector<KernelPair> pairs;
  for (int i = 0; i < count; ++i) {
    const Image hr = test::noise_image(1, size, size, seed + i);
    pairs.push_back({hr, gaussian_blur(hr, sigma)});
  }
  return pairs;
}

double high_frequency_energy(const BlurKernel& k) {
  const std::vector<double> w(k.weights.begin(), k.weights.end());
  const Spectrum f = fft2(w, k.support, k.support);
  double e = 0.0;
  for (int y = 0; y < k.support; ++y) {
    for (int x = 0; x < k.support; ++x) {
      const double fy = std::min(y, k.support - y) / static_cast<double>(k.support);
      const double fx = std::min(x, k.support - x) / static_cast<double>(k.support);
      if (std::hypot(fx, fy) > 0.25) e += std::norm(f[static_cast<std::size_t>(y) * k.support + x]);
    }
  }
  return e;
}

TEST(Fft, RoundTrip) {
  std::vector<double> v(6 * 10);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.3 * i) + 0.01 * i;
  const auto back = ifft2_real(fft2(v, 6, 10), 6, 10);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-12);
}

TEST(Fft, ShiftMovesOriginToCenter) {
  std::vector<double> v(5 * 4, 0.0);
  v[0] = 1.0;
  const auto s = fftshift(v, 5, 4);
  EXPECT_EQ(s[2 * 4 + 2], 1.0);
}

TEST(RadialPsd, ConstantImageIsDcOnly) {
  const RadialPSD p = radial_psd({Image(1, 512, 512, 0.5f)});
  ASSERT_EQ(static_cast<int>(p.log_power.size()), kPsdBins);
  EXPECT_GT(p.log_power[0], 0.0);
  for (int b = 1; b < kPsdBins; ++b) EXPECT_LT(p.log_power[b], -20.0) << "bin " << b;
}

TEST(RadialPsd, BinsIncreaseWithinNyquist) {
  const RadialPSD p = radial_psd({test::noise_image(1, 512, 512, 1)});
  EXPECT_EQ(p.image_count, 1);
  for (std::size_t b = 0; b < p.frequency.size(); ++b) {
    EXPECT_GE(p.frequency[b], 0.0);
    EXPECT_LE(p.frequency[b], 0.5);
    EXPECT_TRUE(std::isfinite(p.log_power[b]));
    if (b > 0) EXPECT_GT(p.frequency[b], p.frequency[b - 1]);
  }
}

TEST(RadialPsd, WhiteNoiseIsFlat) {
  std::vector<Image> imgs;
  for (int i = 0; i < 50; ++i) imgs.push_back(test::noise_image(1, 512, 512, 100 + i));
  EXPECT_LT(radial_psd(imgs).flatness_ratio(1), 1.5);
}

TEST(RadialPsd, WiderBlurLiesBelow) {
  std::vector<Image> narrow, wide;
  for (int i = 0; i < 8; ++i) {
    const Image n = test::noise_image(1, 512, 512, 200 + i);
    narrow.push_back(gaussian_blur(n, 1.0));
    wide.push_back(gaussian_blur(n, 2.0));
  }
  const RadialPSD a = radial_psd(narrow);
  const RadialPSD b = radial_psd(wide);
  for (std::size_t k = 0; k < a.frequency.size(); ++k) {
    if (a.frequency[k] > 0.1) EXPECT_LT(b.log_power[k], a.log_power[k]) << "f=" << a.frequency[k];
  }
}

TEST(RadialPsd, TranslationInvariantAwayFromLowestBins) {
  std::vector<Image> a, b;
  for (int i = 0; i < 20; ++i) {
    const Image big = gaussian_blur(test::noise_image(1, 640, 640, 300 + i), 1.0);
    a.push_back(crop(big, {0, 0, 600, 600}));
    b.push_back(crop(big, {37, 23, 600, 600}));
  }
  const RadialPSD pa = radial_psd(a);
  const RadialPSD pb = radial_psd(b);
  for (std::size_t k = 0; k < pa.frequency.size(); ++k) {
    if (pa.frequency[k] < 0.05) continue;
    EXPECT_NEAR(std::pow(10.0, pb.log_power[k] - pa.log_power[k]), 1.0, 0.02) << "f=" << pa.frequency[k];
  }
}

TEST(RadialPsd, SmallImagesAreUpscaledWithNote) {
  const RadialPSD p = radial_psd({test::noise_image(1, 100, 120, 3)});
  EXPECT_FALSE(p.notes.empty());
  EXPECT_THROW(radial_psd({}), InvalidInput);
}

TEST(RadialPsd, AltitudeCropFraction) {
  EXPECT_DOUBLE_EQ(altitude_crop_fraction(10, 40), 0.25);
  EXPECT_DOUBLE_EQ(altitude_crop_fraction(10, 10), 1.0);
}

TEST(BlurKernelEstimate, RecoversGaussianSigma15) {
  const BlurKernel k = estimate_blur_kernel(gaussian_pairs(1.5, 8, 128, 1));
  EXPECT_NEAR(k.sum(), 1.0, 1e-9);
  EXPECT_LT(BlurKernel::relative_l2(k, gaussian_reference_kernel(1.5)), 0.05);
}

TEST(BlurKernelEstimate, IdentityDegradationGivesDelta) {
  std::vector<KernelPair> pairs;
  for (int i = 0; i < 3; ++i) {
    const Image hr = test::noise_image(1, 96, 96, 10 + i);
    pairs.push_back({hr, hr});
  }
  const BlurKernel k = estimate_blur_kernel(pairs);
  EXPECT_GT(k.at(10, 10), 0.9);
}

TEST(BlurKernelEstimate, WiderBlurHasLargerSecondMoment) {
  const BlurKernel a = estimate_blur_kernel(gaussian_pairs(1.5, 6, 128, 20));
  const BlurKernel b = estimate_blur_kernel(gaussian_pairs(3.0, 6, 128, 20));
  EXPECT_GT(b.second_moment(), a.second_moment());
}

TEST(BlurKernelEstimate, CentroidFollowsLrShift) {
  std::vector<KernelPair> base, shifted;
  for (int i = 0; i < 4; ++i) {
    const Image big = test::noise_image(1, 140, 140, 40 + i);
    const Image blurred = gaussian_blur(big, 1.5);
    base.push_back({crop(big, {6, 6, 128, 128}), crop(blurred, {6, 6, 128, 128})});
    shifted.push_back({crop(big, {6, 6, 128, 128}), crop(blurred, {5, 6, 128, 128})});
  }
  const BlurKernel a = estimate_blur_kernel(base);
  const BlurKernel b = estimate_blur_kernel(shifted);
  EXPECT_NEAR(b.raw_centroid_x - a.raw_centroid_x, 1.0, 0.1);
  EXPECT_NEAR(b.raw_centroid_y - a.raw_centroid_y, 0.0, 0.1);
  EXPECT_LT(std::abs(a.raw_centroid_x), 0.1);
}

TEST(BlurKernelEstimate, LargerLambdaSmoothsKernel) {
  std::vector<KernelPair> pairs;
  for (int i = 0; i < 4; ++i) {
    const Image hr = test::texture_image(1, 96, 96, 60 + i, 1.0);
    pairs.push_back({hr, gaussian_blur(hr, 1.5)});
  }
  double prev = 1e300;
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const double e = high_frequency_energy(estimate_blur_kernel(pairs, {21, lambda}));
    EXPECT_LT(e, prev) << "lambda " << lambda;
    prev = e;
  }
}

TEST(BlurKernelEstimate, InvalidArguments) {
  EXPECT_THROW(estimate_blur_kernel({}), InvalidInput);
  const auto pairs = gaussian_pairs(1.0, 1, 64, 1);
  EXPECT_THROW(estimate_blur_kernel(pairs, {20, 1e-3}), InvalidInput);
  EXPECT_THROW(estimate_blur_kernel(pairs, {21, 0.0}), InvalidInput);
}

TEST(BicubicReferenceKernel, ScaleOneIsDelta) {
  const BlurKernel k = bicubic_reference_kernel(1.0);
  EXPECT_NEAR(k.at(10, 10), 1.0, 1e-12);
}

TEST(BicubicReferenceKernel, ScaleFourMatchesScaledCubic) {
  const BlurKernel k = bicubic_reference_kernel(4.0);
  auto cubic = [](double x) {
    x = std::abs(x);
    if (x <= 1) return 1.5 * x * x * x - 2.5 * x * x + 1;
    if (x <= 2) return -0.5 * x * x * x + 2.5 * x * x - 4 * x + 2;
    return 0.0;
  };
  for (int x = 0; x < 21; ++x) {
    EXPECT_NEAR(k.at(10, x) / k.at(10, 10), cubic((x - 10) / 4.0), 1e-9);
    EXPECT_NEAR(k.at(10, x), k.at(10, 20 - x), 1e-15);
  }
}

TEST(BicubicReferenceKernel, RotationallySymmetricUnder180) {
  for (double s : {1.0, 2.5, 50.0 / 9.0}) {
    const BlurKernel k = bicubic_reference_kernel(s);
    EXPECT_NEAR(k.sum(), 1.0, 1e-12);
    for (int y = 0; y < 21; ++y) {
      for (int x = 0; x < 21; ++x) EXPECT_EQ(k.at(y, x), k.at(20 - y, 20 - x));
    }
  }
}

}  // namespace
}  // namespace dsrf::analysis
