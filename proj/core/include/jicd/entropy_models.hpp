#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jicd/range_coder.hpp"

namespace jicd::entropy {

/// Floor on predicted Gaussian scales.
inline constexpr double kScaleMin = 0.11;
/// Floor on any bin probability used for rate estimation.
inline constexpr double kProbFloor = 0x1p-32;
/// Coded Gaussian supports span +-ceil(kTailSigmas * sigma) around the mean.
inline constexpr double kTailSigmas = 6.0;
/// Upper limit on the half width of any coded support.
inline constexpr std::int32_t kMaxHalfSupport = 1024;

enum class QuantMode { train, infer };

/// Inference quantization: round(v - mu) + mu (half away from zero).
double quantize_infer(double v, double mu = 0.0);
/// Training surrogate: v + u for a caller-supplied u in [-0.5, 0.5).
inline double quantize_train(double v, double u) { return v + u; }

/// Standard normal CDF.
double std_normal_cdf(double x);

/// P(bin centred on v_hat) for N(mu, sigma^2), floored at kProbFloor.
/// Throws ContractViolation when sigma < kScaleMin.
double gaussian_bin_probability(double v_hat, double mu, double sigma);

/// Sum of -log2 p. Throws ContractViolation on p <= 0 or p > 1.
double bits(std::span<const double> probs);

struct RateBreakdown {
  double side = 0.0;
  double base = 0.0;
  double enhancement = 0.0;
  double total() const { return side + base + enhancement; }
};

/// Rate of the latent term (split into base and enhancement) plus the
/// hyper-prior term.
RateBreakdown estimate_rate(std::span<const double> base_probs,
                            std::span<const double> enhancement_probs,
                            std::span<const double> hyper_probs);

/// Integer symbol model over [lo, lo + bins - 2] with a trailing escape bin.
/// Out-of-support symbols are coded as escape followed by an Elias-gamma style
/// magnitude in bypass bits, so every integer is codable.
class SymbolModel {
 public:
  SymbolModel() = default;
  /// probs covers [lo, lo + probs.size() - 1]; escape_prob is the tail mass.
  SymbolModel(std::int32_t lo, std::span<const double> probs, double escape_prob);

  std::int32_t lo() const { return lo_; }
  std::int32_t hi() const { return hi_; }
  const QuantizedCdf& cdf() const { return cdf_; }

  /// Encodes `s`; returns the exact number of bits the coder spends on it
  /// (-log2 of the coded frequencies plus bypass bits).
  double encode(RangeEncoder& enc, std::int32_t s) const;
  std::int32_t decode(RangeDecoder& dec) const;
  /// Bits encode() would spend on `s`, without coding.
  double cost_bits(std::int32_t s) const;

 private:
  std::int32_t lo_ = 0;
  std::int32_t hi_ = -1;
  QuantizedCdf cdf_;
};

/// Discretized zero-mean Gaussian over symbol offsets s = round(v - mu).
SymbolModel gaussian_symbol_model(double sigma);

}  // namespace jicd::entropy
