#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jicd {

/// Fixed header of the scalable container. All fields little-endian:
///
///   offset  size  field
///        0     4  magic "JICD"
///        4     2  version (1)
///        6     4  original height
///       10     4  original width
///       14     2  total latent channels C
///       16     2  base channels i
///       18     8  model id
///
/// followed by three substreams, each a u32 byte length and the bytes, in the
/// order side, base, enhancement. Side and base together decode the denoised
/// image; the enhancement substream is only needed for the noisy reconstruction.
struct BitstreamHeader {
  static constexpr std::array<char, 4> kMagic{'J', 'I', 'C', 'D'};
  static constexpr std::uint16_t kVersion = 1;
  static constexpr std::size_t kSize = 26;

  std::uint16_t version = kVersion;
  std::uint32_t orig_height = 0;
  std::uint32_t orig_width = 0;
  std::uint16_t total_channels = 0;
  std::uint16_t base_channels = 0;
  std::uint64_t model_id = 0;

  /// Padded dimensions implied by the original ones (next multiples of 64).
  std::uint32_t padded_height() const;
  std::uint32_t padded_width() const;

  friend bool operator==(const BitstreamHeader&, const BitstreamHeader&) = default;
};

inline constexpr std::size_t kLengthFieldBytes = 4;
/// Header plus the three length prefixes; all of it is billed to the base layer.
inline constexpr std::size_t kContainerOverheadBytes = BitstreamHeader::kSize + 3 * kLengthFieldBytes;

enum class Substream { side, base, enhancement };
std::string to_string(Substream s);

struct ScalableBitstream {
  BitstreamHeader header;
  std::vector<std::uint8_t> side;
  std::vector<std::uint8_t> base;
  std::vector<std::uint8_t> enhancement;

  std::size_t total_bytes() const {
    return kContainerOverheadBytes + side.size() + base.size() + enhancement.size();
  }

  friend bool operator==(const ScalableBitstream&, const ScalableBitstream&) = default;
};

std::vector<std::uint8_t> serialize(const ScalableBitstream& bs);
/// Full parse; every substream must be present. Throws FormatError.
ScalableBitstream parse(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h);
/// Throws FormatError on bad magic, unsupported version or short input.
BitstreamHeader parse_header(std::span<const std::uint8_t> bytes);

/// Random-access byte source. Decoding goes through one of these so that the
/// bytes actually touched can be audited.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t size() const = 0;
  /// Copies [offset, offset + out.size()); throws FormatError past the end.
  virtual void read(std::size_t offset, std::span<std::uint8_t> out) const = 0;
};

class MemorySource : public ByteSource {
 public:
  explicit MemorySource(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::size_t size() const override { return bytes_.size(); }
  void read(std::size_t offset, std::span<std::uint8_t> out) const override;

 private:
  std::vector<std::uint8_t> bytes_;
};

class FileSource : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  ~FileSource() override;
  std::size_t size() const override { return size_; }
  void read(std::size_t offset, std::span<std::uint8_t> out) const override;

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::size_t size_ = 0;
};

/// Byte range touched through an audited source.
struct ByteRange {
  std::size_t offset;
  std::size_t length;
};

/// Wraps another source and records every read.
class AuditedSource : public ByteSource {
 public:
  explicit AuditedSource(const ByteSource& inner) : inner_(inner) {}
  std::size_t size() const override { return inner_.size(); }
  void read(std::size_t offset, std::span<std::uint8_t> out) const override;
  const std::vector<ByteRange>& reads() const { return reads_; }
  /// True when any recorded read overlaps [offset, offset + length).
  bool touched(std::size_t offset, std::size_t length) const;

 private:
  const ByteSource& inner_;
  mutable std::vector<ByteRange> reads_;
};

/// Lazy container reader: substreams are located and read only on request,
/// so a base-layer decode never reads enhancement bytes.
class BitstreamReader {
 public:
  explicit BitstreamReader(const ByteSource& source);

  const BitstreamHeader& header() const { return header_; }
  std::vector<std::uint8_t> read(Substream s) const;
  /// Byte offset of the substream payload (after its length prefix), or
  /// nullopt when its length prefix lies past the end of the source.
  std::optional<std::size_t> payload_offset(Substream s) const;

 private:
  std::uint32_t read_u32(std::size_t offset, Substream s) const;

  const ByteSource& source_;
  BitstreamHeader header_;
};

}  // namespace jicd
