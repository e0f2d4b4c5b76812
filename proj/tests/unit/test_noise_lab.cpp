#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "jicd/noise_lab.hpp"
#include "jicd/rng.hpp"

using namespace jicd;
using namespace jicd::noise;

namespace {

ImageBuffer ramp(int h, int w) {
  ImageBuffer img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>((y * 7 + x * 3 + c * 50) % 256) / 255.0f;
  return img;
}

double sample_std(const ImageBuffer& out, double center) {
  double s = 0, sq = 0;
  for (float v : out.values()) {
    const double d = 255.0 * v - center;
    s += d;
    sq += d * d;
  }
  const double n = static_cast<double>(out.size());
  return std::sqrt(sq / n - (s / n) * (s / n));
}

// Variance of round(255 * clip(x + eta, 0, 1)) / 255 - x for eta ~ N(0, v),
// by direct summation over the output levels.
double clipped_quantized_variance(double x, double v) {
  const double s = std::sqrt(v);
  auto cdf = [&](double t) { return 0.5 * std::erfc(-(t - x) / (s * std::sqrt(2.0))); };
  double mean = 0, sq = 0;
  for (int k = 0; k <= 255; ++k) {
    const double lo = k == 0 ? -1e9 : (k - 0.5) / 255.0;
    const double hi = k == 255 ? 1e9 : (k + 0.5) / 255.0;
    const double p = cdf(hi) - cdf(lo);
    const double d = k / 255.0 - x;
    mean += p * d;
    sq += p * d * d;
  }
  return sq - mean * mean;
}

}  // namespace

TEST(Awgn, ZeroSigmaIsQuantizedIdentity) {
  const auto clean = ramp(9, 13);
  EXPECT_EQ(synth_awgn(clean, 0.0, 4), clean.quantized_8bit());
}

TEST(Awgn, MidGrayStdAtSigma25) {
  const ImageBuffer clean(256, 256, 128.0f / 255.0f);
  const double std = sample_std(synth_awgn(clean, 25.0, 17), 128.0);
  EXPECT_GE(std, 24.5);
  EXPECT_LE(std, 25.5);
}

TEST(Awgn, OutputClippedAndOnGrid) {
  const auto out = synth_awgn(ramp(40, 40), 80.0, 2);
  for (float v : out.values()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    EXPECT_FLOAT_EQ(std::round(v * 255.0f) / 255.0f, v);
  }
}

TEST(Awgn, DeterministicInSeed) {
  const auto clean = ramp(20, 30);
  EXPECT_EQ(synth_awgn(clean, 25, 9), synth_awgn(clean, 25, 9));
  EXPECT_FALSE(synth_awgn(clean, 25, 9) == synth_awgn(clean, 25, 10));
}

TEST(Awgn, NegativeSigmaRejected) { EXPECT_THROW(synth_awgn(ramp(2, 2), -1, 0), std::invalid_argument); }

TEST(Practical, ZeroParametersIsQuantizedIdentity) {
  const auto clean = ramp(9, 13);
  EXPECT_EQ(synth_practical(clean, 0.0, 0.0, 4), clean.quantized_8bit());
}

TEST(Practical, VarianceAtHalfGray) {
  const ImageBuffer clean(512, 512, 0.5f);
  const auto out = synth_practical(clean, 0.01, 0.0001, 21);
  double s = 0, sq = 0;
  for (float v : out.values()) {
    const double d = v - 0.5;
    s += d;
    sq += d * d;
  }
  const double n = static_cast<double>(out.size());
  const double var = sq / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 0.0051, 0.05 * 0.0051);
  EXPECT_NEAR(var, clipped_quantized_variance(0.5, 0.0051), 0.03 * 0.0051);
}

TEST(Practical, ExactPoissonHasMatchingVariance) {
  const ImageBuffer clean(256, 256, 0.5f);
  const std::array<double, 3> a{0.01, 0.01, 0.01}, b{0.0001, 0.0001, 0.0001};
  const auto out = synth_practical(clean, a, b, 5, true);
  EXPECT_NEAR(sample_std(out, 127.5) / 255.0, std::sqrt(0.0051), 0.05 * std::sqrt(0.0051));
}

TEST(Practical, NegativeParametersRejected) {
  EXPECT_THROW(synth_practical(ramp(2, 2), -0.1, 0.0, 0), std::invalid_argument);
  EXPECT_THROW(synth_practical(ramp(2, 2), 0.0, -0.1, 0), std::invalid_argument);
}

TEST(EstimateSigma, IdenticalImagesGiveZero) {
  const auto clean = ramp(10, 10);
  const auto est = estimate_sigma(clean, clean);
  EXPECT_EQ(est.sigma, 0.0);
  EXPECT_FALSE(est.degenerate);
}

TEST(EstimateSigma, UnclippedAwgnAtSigma25) {
  const ImageBuffer clean(512, 512, 0.5f);
  ImageBuffer noisy = clean;
  Rng rng(31);
  std::normal_distribution<double> n(0.0, 25.0 / 255.0);
  for (auto& v : noisy.values()) v = static_cast<float>(v + n(rng));
  const auto est = estimate_sigma(noisy, clean);
  EXPECT_GE(est.sigma, 24.5);
  EXPECT_LE(est.sigma, 25.5);
}

TEST(EstimateSigma, SinglePixelIsDegenerate) {
  const ImageBuffer a(1, 1, 0.2f), b(1, 1, 0.4f);
  const auto est = estimate_sigma(a, b);
  EXPECT_TRUE(est.degenerate);
  EXPECT_EQ(est.sigma, 0.0);
}

TEST(EstimateSigma, DimensionMismatchRejected) {
  EXPECT_THROW(estimate_sigma(ImageBuffer(2, 2), ImageBuffer(2, 3)), std::invalid_argument);
}

TEST(VariableSigma, FrequenciesAreBalanced) {
  NoiseSpec spec;
  spec.kind = NoiseKind::variable_awgn;
  spec.seed = 12;
  std::map<double, int> counts;
  const int n = 3000;
  for (int k = 0; k < n; ++k) ++counts[sigma_for_iteration(spec, k)];
  ASSERT_EQ(counts.size(), 3u);
  for (const auto& [sigma, c] : counts) {
    EXPECT_GE(c / double(n), 0.30) << sigma;
    EXPECT_LE(c / double(n), 0.37) << sigma;
  }
}

TEST(Apply, StreamsAreIndependentAndReproducible) {
  NoiseSpec spec;
  spec.sigma = 25;
  spec.seed = 3;
  const auto clean = ramp(16, 16);
  EXPECT_EQ(apply(spec, clean, 1), apply(spec, clean, 1));
  EXPECT_FALSE(apply(spec, clean, 1) == apply(spec, clean, 2));
  const auto override_zero = apply(spec, clean, 1, 0.0);
  EXPECT_EQ(override_zero, clean.quantized_8bit());
}

TEST(NoiseKind, NamesRoundTrip) {
  for (auto k : {NoiseKind::awgn, NoiseKind::practical, NoiseKind::variable_awgn}) {
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_noise_kind("speckle"), std::invalid_argument);
}
