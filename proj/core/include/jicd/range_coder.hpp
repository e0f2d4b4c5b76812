#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace jicd::entropy {

/// Frequencies inside the coder are integers summing to 2^kPrecisionBits.
inline constexpr int kPrecisionBits = 16;
inline constexpr std::uint32_t kTotalFreq = 1u << kPrecisionBits;

/// Probability mass function over the integers [offset, offset + probs.size()).
struct Pmf {
  std::int32_t offset = 0;
  std::vector<double> probs;

  std::int32_t lo() const { return offset; }
  std::int32_t hi() const { return offset + static_cast<std::int32_t>(probs.size()) - 1; }
  bool contains(std::int32_t s) const { return s >= lo() && s <= hi(); }
};

/// Cumulative frequency table with every bin >= 1 and total kTotalFreq.
class QuantizedCdf {
 public:
  QuantizedCdf() = default;

  /// Quantizes `probs` (need not be normalized, must be finite and > 0).
  /// At most kTotalFreq bins.
  static QuantizedCdf from_probabilities(std::span<const double> probs);

  std::size_t bins() const { return cdf_.empty() ? 0 : cdf_.size() - 1; }
  std::uint32_t start(std::size_t bin) const { return cdf_[bin]; }
  std::uint32_t freq(std::size_t bin) const { return cdf_[bin + 1] - cdf_[bin]; }
  /// Bin whose interval contains the cumulative value `v` (< kTotalFreq).
  std::size_t find(std::uint32_t v) const;
  /// -log2 of the coded probability of `bin`.
  double cost_bits(std::size_t bin) const;

 private:
  std::vector<std::uint32_t> cdf_;
};

/// Byte-oriented range coder with carry propagation (32-bit range, 64-bit low).
///
/// The first output byte is always the initial cache byte and finish() emits
/// five flush bytes, so an empty message costs 5 bytes. The decoder consumes
/// exactly the bytes the encoder produced, which is what lets it flag a
/// truncated stream.
class RangeEncoder {
 public:
  void encode(const QuantizedCdf& cdf, std::size_t bin);
  /// Uniform bypass bits, 1 <= nbits <= 16.
  void encode_bits(std::uint32_t value, int nbits);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();
  void normalize();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  std::size_t decode(const QuantizedCdf& cdf);
  std::uint32_t decode_bits(int nbits);

  /// Bytes consumed so far.
  std::size_t position() const { return pos_; }
  /// Symbols decoded so far (for diagnostics).
  std::size_t symbols_decoded() const { return count_; }

 private:
  std::uint8_t next_byte();
  void normalize();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::size_t count_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

/// Codes each symbol under its own pmf. Throws std::out_of_range when a
/// symbol lies outside its pmf support.
std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       std::span<const Pmf> pmfs);

/// Inverse of range_encode for pmfs.size() symbols. Throws DecodeError on a
/// truncated or corrupted byte string.
std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const Pmf> pmfs);

}  // namespace jicd::entropy
