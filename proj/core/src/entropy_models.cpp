#include "jicd/entropy_models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "jicd/errors.hpp"

namespace jicd::entropy {

double quantize_infer(double v, double mu) { return std::round(v - mu) + mu; }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gaussian_bin_probability(double v_hat, double mu, double sigma) {
  if (!(sigma >= kScaleMin)) {
    throw ContractViolation("gaussian_bin_probability: sigma " + std::to_string(sigma) +
                            " is below the floor " + std::to_string(kScaleMin));
  }
  // Evaluate on the lower tail, where the CDF difference keeps its precision.
  const double v = std::abs(v_hat - mu);
  const double p = std_normal_cdf((0.5 - v) / sigma) - std_normal_cdf((-0.5 - v) / sigma);
  return std::max(p, kProbFloor);
}

double bits(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0) || p > 1.0) {
      throw ContractViolation("rate estimate needs probabilities in (0, 1], got " +
                              std::to_string(p));
    }
    total -= std::log2(p);
  }
  return total;
}

RateBreakdown estimate_rate(std::span<const double> base_probs,
                            std::span<const double> enhancement_probs,
                            std::span<const double> hyper_probs) {
  return {bits(hyper_probs), bits(base_probs), bits(enhancement_probs)};
}

SymbolModel::SymbolModel(std::int32_t lo, std::span<const double> probs, double escape_prob)
    : lo_(lo), hi_(lo + static_cast<std::int32_t>(probs.size()) - 1) {
  std::vector<double> p(probs.begin(), probs.end());
  p.push_back(std::max(escape_prob, kProbFloor));
  for (double& v : p) v = std::max(v, kProbFloor);
  cdf_ = QuantizedCdf::from_probabilities(p);
}

namespace {

constexpr int kLengthBits = 5;

struct Escape {
  std::uint32_t sign;
  std::uint64_t magnitude;  // >= 1
};

Escape escape_of(std::int32_t s, std::int32_t lo, std::int32_t hi) {
  if (s < lo) return {0u, static_cast<std::uint64_t>(std::int64_t{lo} - s)};
  return {1u, static_cast<std::uint64_t>(std::int64_t{s} - hi)};
}

}  // namespace

double SymbolModel::cost_bits(std::int32_t s) const {
  if (s >= lo_ && s <= hi_) return cdf_.cost_bits(static_cast<std::size_t>(s - lo_));
  const Escape e = escape_of(s, lo_, hi_);
  const int width = std::bit_width(e.magnitude);
  return cdf_.cost_bits(cdf_.bins() - 1) + 1.0 + kLengthBits + (width - 1);
}

double SymbolModel::encode(RangeEncoder& enc, std::int32_t s) const {
  const double cost = cost_bits(s);
  if (s >= lo_ && s <= hi_) {
    enc.encode(cdf_, static_cast<std::size_t>(s - lo_));
    return cost;
  }
  enc.encode(cdf_, cdf_.bins() - 1);
  const Escape e = escape_of(s, lo_, hi_);
  const int width = std::bit_width(e.magnitude);
  enc.encode_bits(e.sign, 1);
  enc.encode_bits(static_cast<std::uint32_t>(width - 1), kLengthBits);
  // Mantissa below the leading one, most significant chunk first.
  int remaining = width - 1;
  while (remaining > 0) {
    const int chunk = std::min(remaining, 16);
    remaining -= chunk;
    enc.encode_bits(static_cast<std::uint32_t>(e.magnitude >> remaining), chunk);
  }
  return cost;
}

std::int32_t SymbolModel::decode(RangeDecoder& dec) const {
  const std::size_t bin = dec.decode(cdf_);
  if (bin + 1 < cdf_.bins()) return lo_ + static_cast<std::int32_t>(bin);
  const std::uint32_t sign = dec.decode_bits(1);
  const int width = static_cast<int>(dec.decode_bits(kLengthBits)) + 1;
  std::uint64_t magnitude = 1;
  int remaining = width - 1;
  while (remaining > 0) {
    const int chunk = std::min(remaining, 16);
    remaining -= chunk;
    magnitude = (magnitude << chunk) | dec.decode_bits(chunk);
  }
  const std::int64_t value = sign ? std::int64_t{hi_} + static_cast<std::int64_t>(magnitude)
                                  : std::int64_t{lo_} - static_cast<std::int64_t>(magnitude);
  if (value < INT32_MIN || value > INT32_MAX) {
    throw DecodeError("escaped symbol out of range at byte " + std::to_string(dec.position()));
  }
  return static_cast<std::int32_t>(value);
}

SymbolModel gaussian_symbol_model(double sigma) {
  if (!(sigma >= kScaleMin)) {
    throw ContractViolation("gaussian_symbol_model: sigma below the floor");
  }
  const auto half = static_cast<std::int32_t>(
      std::clamp(std::ceil(kTailSigmas * sigma), 1.0, static_cast<double>(kMaxHalfSupport)));
  std::vector<double> probs(static_cast<std::size_t>(2 * half + 1));
  for (std::int32_t s = -half; s <= half; ++s) {
    probs[static_cast<std::size_t>(s + half)] = gaussian_bin_probability(s, 0.0, sigma);
  }
  const double tail = 2.0 * std_normal_cdf(-(half + 0.5) / sigma);
  return SymbolModel(-half, probs, tail);
}

}  // namespace jicd::entropy
