#include "jicd/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "jicd/errors.hpp"

namespace jicd::entropy {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

QuantizedCdf QuantizedCdf::from_probabilities(std::span<const double> probs) {
  const std::size_t n = probs.size();
  if (n == 0 || n > kTotalFreq) {
    throw std::invalid_argument("pmf must have between 1 and 65536 bins, got " +
                                std::to_string(n));
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("pmf entries must be finite and strictly positive");
    }
    total += p;
  }

  std::vector<std::int64_t> freq(n);
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double scaled = probs[k] / total * static_cast<double>(kTotalFreq);
    freq[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(scaled)));
    sum += freq[k];
  }
  // Settle the rounding residue on the largest bins; every bin keeps >= 1.
  std::int64_t diff = static_cast<std::int64_t>(kTotalFreq) - sum;
  while (diff != 0) {
    auto it = std::max_element(freq.begin(), freq.end());
    if (diff > 0) {
      *it += diff;
      diff = 0;
    } else {
      const std::int64_t take = std::min(-diff, *it - 1);
      if (take == 0) throw std::logic_error("cannot fit pmf into coder precision");
      *it -= take;
      diff += take;
    }
  }

  QuantizedCdf q;
  q.cdf_.resize(n + 1);
  q.cdf_[0] = 0;
  for (std::size_t k = 0; k < n; ++k) {
    q.cdf_[k + 1] = q.cdf_[k] + static_cast<std::uint32_t>(freq[k]);
  }
  return q;
}

std::size_t QuantizedCdf::find(std::uint32_t v) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
  return static_cast<std::size_t>(it - cdf_.begin()) - 1;
}

double QuantizedCdf::cost_bits(std::size_t bin) const {
  return static_cast<double>(kPrecisionBits) - std::log2(static_cast<double>(freq(bin)));
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::normalize() {
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode(const QuantizedCdf& cdf, std::size_t bin) {
  if (finished_) throw std::logic_error("RangeEncoder used after finish()");
  const std::uint32_t r = range_ >> kPrecisionBits;
  low_ += static_cast<std::uint64_t>(r) * cdf.start(bin);
  range_ = r * cdf.freq(bin);
  normalize();
}

void RangeEncoder::encode_bits(std::uint32_t value, int nbits) {
  if (nbits < 1 || nbits > 16) throw std::invalid_argument("bypass width must be 1..16 bits");
  if (finished_) throw std::logic_error("RangeEncoder used after finish()");
  const std::uint32_t r = range_ >> nbits;
  low_ += static_cast<std::uint64_t>(r) * (value & ((1u << nbits) - 1u));
  range_ = r;
  normalize();
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  if (!finished_) {
    for (int k = 0; k < 5; ++k) shift_low();
    finished_ = true;
  }
  return out_;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  for (int k = 0; k < 5; ++k) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) {
    throw DecodeError("range decoder ran past the end of a " + std::to_string(bytes_.size()) +
                      "-byte substream (after " + std::to_string(count_) +
                      " symbols); the stream is truncated");
  }
  return bytes_[pos_++];
}

void RangeDecoder::normalize() {
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
}

std::size_t RangeDecoder::decode(const QuantizedCdf& cdf) {
  const std::uint32_t r = range_ >> kPrecisionBits;
  const std::uint32_t v = code_ / r;
  if (v >= kTotalFreq) {
    throw DecodeError("corrupted range coder state at byte " + std::to_string(pos_) +
                      " (symbol " + std::to_string(count_) + ")");
  }
  const std::size_t bin = cdf.find(v);
  code_ -= r * cdf.start(bin);
  range_ = r * cdf.freq(bin);
  ++count_;
  normalize();
  return bin;
}

std::uint32_t RangeDecoder::decode_bits(int nbits) {
  if (nbits < 1 || nbits > 16) throw std::invalid_argument("bypass width must be 1..16 bits");
  const std::uint32_t r = range_ >> nbits;
  const std::uint32_t v = code_ / r;
  if (v >= (1u << nbits)) {
    throw DecodeError("corrupted range coder state at byte " + std::to_string(pos_) +
                      " (bypass read after symbol " + std::to_string(count_) + ")");
  }
  code_ -= r * v;
  range_ = r;
  normalize();
  return v;
}

std::vector<std::uint8_t> range_encode(std::span<const std::int32_t> symbols,
                                       std::span<const Pmf> pmfs) {
  if (symbols.size() != pmfs.size()) {
    throw std::invalid_argument("range_encode: one pmf per symbol is required");
  }
  RangeEncoder enc;
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const Pmf& pmf = pmfs[k];
    if (!pmf.contains(symbols[k])) {
      throw std::out_of_range("range_encode: symbol " + std::to_string(symbols[k]) + " at index " +
                              std::to_string(k) + " outside pmf support [" +
                              std::to_string(pmf.lo()) + ", " + std::to_string(pmf.hi()) + "]");
    }
    auto cdf = QuantizedCdf::from_probabilities(pmf.probs);
    enc.encode(cdf, static_cast<std::size_t>(symbols[k] - pmf.offset));
  }
  return enc.finish();
}

std::vector<std::int32_t> range_decode(std::span<const std::uint8_t> bytes,
                                       std::span<const Pmf> pmfs) {
  RangeDecoder dec(bytes);
  std::vector<std::int32_t> out;
  out.reserve(pmfs.size());
  for (const Pmf& pmf : pmfs) {
    auto cdf = QuantizedCdf::from_probabilities(pmf.probs);
    out.push_back(pmf.offset + static_cast<std::int32_t>(dec.decode(cdf)));
  }
  return out;
}

}  // namespace jicd::entropy
