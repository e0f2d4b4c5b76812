#include "jicd/bitstream.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "jicd/errors.hpp"

namespace jicd {

namespace {

std::uint32_t round_up(std::uint32_t v, std::uint32_t m) { return (v + m - 1) / m * m; }

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * k)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) {
    v |= static_cast<std::uint64_t>(in[offset + k]) << (8 * k);
  }
  return static_cast<T>(v);
}

}  // namespace

std::uint32_t BitstreamHeader::padded_height() const { return round_up(orig_height, 64); }
std::uint32_t BitstreamHeader::padded_width() const { return round_up(orig_width, 64); }

std::string to_string(Substream s) {
  switch (s) {
    case Substream::side: return "side";
    case Substream::base: return "base";
    case Substream::enhancement: return "enhancement";
  }
  return "unknown";
}

std::vector<std::uint8_t> serialize_header(const BitstreamHeader& h) {
  std::vector<std::uint8_t> out;
  out.reserve(BitstreamHeader::kSize);
  out.insert(out.end(), BitstreamHeader::kMagic.begin(), BitstreamHeader::kMagic.end());
  put_le<std::uint16_t>(out, h.version);
  put_le<std::uint32_t>(out, h.orig_height);
  put_le<std::uint32_t>(out, h.orig_width);
  put_le<std::uint16_t>(out, h.total_channels);
  put_le<std::uint16_t>(out, h.base_channels);
  put_le<std::uint64_t>(out, h.model_id);
  return out;
}

BitstreamHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < BitstreamHeader::kSize) {
    throw FormatError("bitstream too short for a header (" + std::to_string(bytes.size()) +
                      " bytes)");
  }
  if (!std::equal(BitstreamHeader::kMagic.begin(), BitstreamHeader::kMagic.end(), bytes.begin())) {
    throw FormatError("bad magic: not a JICD bitstream");
  }
  BitstreamHeader h;
  h.version = get_le<std::uint16_t>(bytes, 4);
  if (h.version != BitstreamHeader::kVersion) {
    throw FormatError("unsupported version " + std::to_string(h.version) + " (expected " +
                      std::to_string(BitstreamHeader::kVersion) + ")");
  }
  h.orig_height = get_le<std::uint32_t>(bytes, 6);
  h.orig_width = get_le<std::uint32_t>(bytes, 10);
  h.total_channels = get_le<std::uint16_t>(bytes, 14);
  h.base_channels = get_le<std::uint16_t>(bytes, 16);
  h.model_id = get_le<std::uint64_t>(bytes, 18);
  if (h.orig_height == 0 || h.orig_width == 0) throw FormatError("zero image dimension in header");
  if (h.base_channels == 0 || h.base_channels > h.total_channels) {
    throw FormatError("inconsistent channel split in header");
  }
  return h;
}

std::vector<std::uint8_t> serialize(const ScalableBitstream& bs) {
  auto out = serialize_header(bs.header);
  for (const auto* sub : {&bs.side, &bs.base, &bs.enhancement}) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sub->size()));
    out.insert(out.end(), sub->begin(), sub->end());
  }
  return out;
}

ScalableBitstream parse(std::span<const std::uint8_t> bytes) {
  MemorySource src(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
  BitstreamReader reader(src);
  ScalableBitstream bs;
  bs.header = reader.header();
  bs.side = reader.read(Substream::side);
  bs.base = reader.read(Substream::base);
  bs.enhancement = reader.read(Substream::enhancement);
  const std::size_t end = *reader.payload_offset(Substream::enhancement) + bs.enhancement.size();
  if (end != bytes.size()) {
    throw FormatError(std::to_string(bytes.size() - end) + " trailing bytes after enhancement");
  }
  return bs;
}

void MemorySource::read(std::size_t offset, std::span<std::uint8_t> out) const {
  if (offset > bytes_.size() || out.size() > bytes_.size() - offset) {
    throw FormatError("read past end of bitstream");
  }
  std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(offset), out.size(), out.begin());
}

FileSource::FileSource(const std::filesystem::path& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) throw std::runtime_error("cannot open bitstream '" + path.string() + "'");
  size_ = static_cast<std::size_t>(std::filesystem::file_size(path));
}

FileSource::~FileSource() {
  if (file_) std::fclose(file_);
}

void FileSource::read(std::size_t offset, std::span<std::uint8_t> out) const {
  if (offset > size_ || out.size() > size_ - offset) {
    throw FormatError("read past end of '" + path_.string() + "'");
  }
  if (std::fseek(file_, static_cast<long>(offset), SEEK_SET) != 0 ||
      std::fread(out.data(), 1, out.size(), file_) != out.size()) {
    throw std::runtime_error("I/O error reading '" + path_.string() + "'");
  }
}

void AuditedSource::read(std::size_t offset, std::span<std::uint8_t> out) const {
  reads_.push_back({offset, out.size()});
  inner_.read(offset, out);
}

bool AuditedSource::touched(std::size_t offset, std::size_t length) const {
  return std::any_of(reads_.begin(), reads_.end(), [&](const ByteRange& r) {
    return r.length > 0 && length > 0 && r.offset < offset + length && offset < r.offset + r.length;
  });
}

BitstreamReader::BitstreamReader(const ByteSource& source) : source_(source) {
  std::vector<std::uint8_t> head(std::min(source.size(), BitstreamHeader::kSize));
  source.read(0, head);
  header_ = parse_header(head);
}

std::uint32_t BitstreamReader::read_u32(std::size_t offset, Substream s) const {
  if (offset + kLengthFieldBytes > source_.size()) {
    throw FormatError(to_string(s) + " substream is missing");
  }
  std::array<std::uint8_t, 4> b{};
  source_.read(offset, b);
  return get_le<std::uint32_t>(b, 0);
}

std::optional<std::size_t> BitstreamReader::payload_offset(Substream s) const {
  std::size_t offset = BitstreamHeader::kSize;
  for (Substream cur : {Substream::side, Substream::base, Substream::enhancement}) {
    if (offset + kLengthFieldBytes > source_.size()) return std::nullopt;
    if (cur == s) return offset + kLengthFieldBytes;
    offset += kLengthFieldBytes + read_u32(offset, cur);
  }
  return std::nullopt;
}

std::vector<std::uint8_t> BitstreamReader::read(Substream s) const {
  const auto payload = payload_offset(s);
  if (!payload) throw FormatError(to_string(s) + " substream is missing");
  const std::uint32_t length = read_u32(*payload - kLengthFieldBytes, s);
  if (*payload + length > source_.size()) {
    throw FormatError(to_string(s) + " substream is truncated (" + std::to_string(length) +
                      " bytes declared, " + std::to_string(source_.size() - *payload) +
                      " available)");
  }
  std::vector<std::uint8_t> out(length);
  source_.read(*payload, out);
  return out;
}

}  // namespace jicd
