#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "jicd/bitstream.hpp"
#include "jicd/errors.hpp"

using namespace jicd;

namespace {

ScalableBitstream sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255), len(0, 300);
  ScalableBitstream bs;
  bs.header.orig_height = 321;
  bs.header.orig_width = 481;
  bs.header.total_channels = 48;
  bs.header.base_channels = 40;
  bs.header.model_id = 0x0123456789ABCDEFull ^ seed;
  for (auto* s : {&bs.side, &bs.base, &bs.enhancement}) {
    s->resize(static_cast<std::size_t>(len(rng)));
    for (auto& b : *s) b = static_cast<std::uint8_t>(byte(rng));
  }
  return bs;
}

}  // namespace

TEST(Header, LayoutIsLittleEndian) {
  BitstreamHeader h;
  h.orig_height = 0x01020304;
  h.orig_width = 0x0A0B0C0D;
  h.total_channels = 0x0304;
  h.base_channels = 0x0102;
  h.model_id = 0x1122334455667788ull;
  const auto b = serialize_header(h);
  ASSERT_EQ(b.size(), BitstreamHeader::kSize);
  const std::vector<std::uint8_t> expected{'J', 'I', 'C', 'D', 1, 0, 4, 3, 2, 1, 0x0D, 0x0C, 0x0B,
                                           0x0A, 4, 3, 2, 1, 0x88, 0x77, 0x66, 0x55, 0x44, 0x33,
                                           0x22, 0x11};
  EXPECT_EQ(b, expected);
  EXPECT_EQ(parse_header(b), h);
}

TEST(Header, PaddedDims) {
  BitstreamHeader h;
  h.orig_height = 500;
  h.orig_width = 64;
  EXPECT_EQ(h.padded_height(), 512u);
  EXPECT_EQ(h.padded_width(), 64u);
}

TEST(Container, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto bs = sample(seed);
    const auto bytes = serialize(bs);
    EXPECT_EQ(bytes.size(), bs.total_bytes());
    EXPECT_EQ(parse(bytes), bs);
    EXPECT_EQ(serialize(parse(bytes)), bytes);
  }
}

TEST(Container, EveryMagicAndVersionMutationRejected) {
  const auto bytes = serialize(sample(1));
  for (std::size_t pos = 0; pos < 6; ++pos) {
    for (int v = 0; v < 256; ++v) {
      if (v == bytes[pos]) continue;
      auto m = bytes;
      m[pos] = static_cast<std::uint8_t>(v);
      EXPECT_THROW((void)parse(m), FormatError) << pos << " " << v;
    }
  }
}

TEST(Container, VersionTwoMessage) {
  auto bytes = serialize(sample(2));
  bytes[4] = 2;
  try {
    (void)parse(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported version"), std::string::npos);
  }
}

TEST(Container, TruncationRejected) {
  const auto bytes = serialize(sample(3));
  for (std::size_t n : {std::size_t{0}, std::size_t{10}, BitstreamHeader::kSize, bytes.size() - 1}) {
    EXPECT_THROW((void)parse(std::span(bytes).first(n)), FormatError) << n;
  }
}

TEST(Container, TrailingBytesRejected) {
  auto bytes = serialize(sample(4));
  bytes.push_back(0);
  EXPECT_THROW((void)parse(bytes), FormatError);
}

TEST(Reader, BaseSubstreamsNeverTouchEnhancementBytes) {
  const auto bs = sample(5);
  const MemorySource mem(serialize(bs));
  const AuditedSource audited(mem);
  const BitstreamReader reader(audited);
  EXPECT_EQ(reader.header(), bs.header);
  EXPECT_EQ(reader.read(Substream::side), bs.side);
  EXPECT_EQ(reader.read(Substream::base), bs.base);
  const auto enh = *reader.payload_offset(Substream::enhancement);
  EXPECT_FALSE(audited.touched(enh, bs.enhancement.size()));
  EXPECT_EQ(reader.read(Substream::enhancement), bs.enhancement);
  if (!bs.enhancement.empty()) {
    EXPECT_TRUE(audited.touched(enh, bs.enhancement.size()));
  }
}

TEST(Reader, TruncatedEnhancementStillServesBase) {
  const auto bs = sample(6);
  auto bytes = serialize(bs);
  bytes.resize(bytes.size() - bs.enhancement.size() - 4);
  const MemorySource mem(bytes);
  const BitstreamReader reader(mem);
  EXPECT_EQ(reader.read(Substream::base), bs.base);
  EXPECT_FALSE(reader.payload_offset(Substream::enhancement).has_value());
  try {
    (void)reader.read(Substream::enhancement);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("enhancement"), std::string::npos) << e.what();
  }
}

TEST(Reader, FileSourceMatchesMemory) {
  const auto bs = sample(7);
  const auto path = std::filesystem::temp_directory_path() / "jicd_test_container.jicd";
  {
    std::ofstream os(path, std::ios::binary);
    const auto bytes = serialize(bs);
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const FileSource file(path);
  const BitstreamReader reader(file);
  EXPECT_EQ(reader.read(Substream::enhancement), bs.enhancement);
  std::filesystem::remove(path);
}
