#include <gtest/gtest.h>
#include <torch/torch.h>

#include <random>

#include "jicd/codec.hpp"
#include "jicd/errors.hpp"
#include "jicd/padding.hpp"
#include "jicd/synthetic.hpp"
#include "test_support.hpp"

using namespace jicd;

namespace {

net::JicdModel micro(std::uint64_t seed = 1) {
  net::JicdModel m(jicd::testing::micro_config(), seed);
  m->eval();
  return m;
}

ImageBuffer image(int h, int w, std::uint64_t index = 0) { return data::synthetic_image(h, w, 3, index); }

// Bits of an ideal coder for the decoded values under a continuous Gaussian,
// recomputed from the entropy parameters of the batch path.
double continuous_bits(net::JicdModelImpl& model, net::Layer layer, const codec::LayerCodes& codes,
                       const torch::Tensor& features) {
  const auto y = torch::tensor(codes.values, torch::kFloat64)
                     .reshape({1, codes.channels, codes.rows, codes.cols})
                     .to(torch::kFloat32);
  const auto p = model.entropy_params(layer, y, features);
  const auto lik = net::gaussian_likelihood(y.to(torch::kFloat64), p.mu.to(torch::kFloat64),
                                            p.sigma.to(torch::kFloat64));
  return -torch::log2(torch::clamp_min(lik, entropy::kProbFloor)).sum().item<double>();
}

}  // namespace

TEST(Codec, RoundTripMatchesTransformPath) {
  torch::NoGradGuard g;
  auto m = micro();
  const auto img = image(70, 90);
  const auto enc = codec::compress(img, *m);
  const auto padded = eval::pad_to_64(img).image;
  const auto codes = codec::quantize_latents(padded, *m);
  EXPECT_EQ(enc.codes.base.symbols, codes.base.symbols);
  EXPECT_EQ(enc.codes.enhancement.symbols, codes.enhancement.symbols);
  EXPECT_EQ(enc.codes.hyper.symbols, codes.hyper.symbols);
  const eval::Dims dims{70, 90};
  EXPECT_EQ(codec::decode_base(enc.bitstream, *m), eval::crop_back(codec::synthesize_base(codes, *m), dims));
  EXPECT_EQ(codec::decode_full(enc.bitstream, *m), eval::crop_back(codec::synthesize_full(codes, *m), dims));
}

TEST(Codec, DecodedLatentsAreLossless) {
  torch::NoGradGuard g;
  auto m = micro(2);
  for (int k = 0; k < 3; ++k) {
    const auto enc = codec::compress(image(64 + 20 * k, 100, k), *m);
    const MemorySource src(serialize(enc.bitstream));
    const BitstreamReader reader(src);
    const auto dec = codec::decode_latents(reader, *m, true);
    EXPECT_EQ(dec.hyper.symbols, enc.codes.hyper.symbols);
    EXPECT_EQ(dec.base.symbols, enc.codes.base.symbols);
    EXPECT_EQ(dec.enhancement.symbols, enc.codes.enhancement.symbols);
    EXPECT_EQ(dec.base.values, enc.codes.base.values);
  }
}

TEST(Codec, HeaderFields) {
  torch::NoGradGuard g;
  auto m = micro();
  const auto enc = codec::compress(image(65, 129), *m);
  const auto& h = enc.bitstream.header;
  EXPECT_EQ(h.orig_height, 65u);
  EXPECT_EQ(h.orig_width, 129u);
  EXPECT_EQ(h.total_channels, 8);
  EXPECT_EQ(h.base_channels, 6);
  EXPECT_EQ(h.model_id, net::model_id(*m));
  EXPECT_EQ(h.padded_height(), 128u);
  EXPECT_EQ(h.padded_width(), 192u);
}

TEST(Codec, ToyEncodeHasThreeNonemptySubstreams) {
  torch::NoGradGuard g;
  net::JicdModel m(net::ModelConfig::toy(), 3);
  m->eval();
  const auto enc = codec::compress(image(64, 64), *m);
  EXPECT_FALSE(enc.bitstream.side.empty());
  EXPECT_FALSE(enc.bitstream.base.empty());
  EXPECT_FALSE(enc.bitstream.enhancement.empty());
  const auto& b = enc.bitstream;
  for (auto [bytes, est] : {std::pair{b.side.size(), enc.coded_bits.side},
                            std::pair{b.base.size(), enc.coded_bits.base},
                            std::pair{b.enhancement.size(), enc.coded_bits.enhancement}}) {
    EXPECT_GE(8.0 * bytes, est - 1e-6);
    EXPECT_LE(8.0 * bytes, est + 256 + 0.01 * est);
  }
}

TEST(Codec, ModelBitsMatchBatchLikelihoods) {
  torch::NoGradGuard g;
  auto m = micro(4);
  const auto padded = eval::pad_to_64(image(64, 128)).image;
  const auto codes = codec::quantize_latents(padded, *m);
  const auto z = torch::tensor(codes.hyper.values, torch::kFloat64)
                     .reshape({1, codes.hyper.channels, codes.hyper.rows, codes.hyper.cols})
                     .to(torch::kFloat32);
  const auto features = m->hyper_synthesis(z);
  const double base = continuous_bits(*m, net::Layer::base, codes.base, features);
  const double enh = continuous_bits(*m, net::Layer::enhancement, codes.enhancement, features);
  EXPECT_NEAR(codes.base.model_bits, base, 1e-3 * base + 0.5);
  EXPECT_NEAR(codes.enhancement.model_bits, enh, 1e-3 * enh + 0.5);
}

TEST(Codec, DeterministicAcrossRuns) {
  torch::NoGradGuard g;
  auto a = micro(5), b = micro(5);
  const auto img = image(80, 70, 9);
  const auto e1 = serialize(codec::compress(img, *a).bitstream);
  const auto e2 = serialize(codec::compress(img, *b).bitstream);
  EXPECT_EQ(e1, e2);
  EXPECT_EQ(codec::decode_full(parse(e1), *a), codec::decode_full(parse(e2), *b));
}

TEST(Codec, BaseIgnoresEnhancementMutations) {
  torch::NoGradGuard g;
  auto m = micro(6);
  auto bs = codec::compress(image(100, 70), *m).bitstream;
  const auto reference = codec::decode_base(bs, *m);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    auto mutated = bs;
    mutated.enhancement.resize(static_cast<std::size_t>(rng() % 64));
    for (auto& b : mutated.enhancement) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(codec::decode_base(mutated, *m), reference);
  }
}

TEST(Codec, BaseDecodeNeverReadsEnhancementBytes) {
  torch::NoGradGuard g;
  auto m = micro(7);
  const auto bs = codec::compress(image(64, 64), *m).bitstream;
  const MemorySource mem(serialize(bs));
  const AuditedSource audited(mem);
  (void)codec::decode_base(audited, *m);
  const BitstreamReader reader(mem);
  const auto offset = *reader.payload_offset(Substream::enhancement);
  EXPECT_FALSE(audited.touched(offset, bs.enhancement.size()));
  EXPECT_FALSE(audited.touched(offset - 4, 4));
}

TEST(Codec, MissingEnhancementNamedForFullDecode) {
  torch::NoGradGuard g;
  auto m = micro(8);
  auto bs = codec::compress(image(64, 64), *m).bitstream;
  bs.enhancement.clear();
  try {
    (void)codec::decode_full(bs, *m);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("enhancement"), std::string::npos) << e.what();
  }
}

TEST(Codec, MissingBaseNamed) {
  torch::NoGradGuard g;
  auto m = micro(8);
  auto bs = codec::compress(image(64, 64), *m).bitstream;
  bs.base.clear();
  try {
    (void)codec::decode_base(bs, *m);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("base"), std::string::npos) << e.what();
  }
}

TEST(Codec, ModelMismatchRejected) {
  torch::NoGradGuard g;
  auto m = micro(9), other = micro(10);
  const auto bs = codec::compress(image(64, 64), *m).bitstream;
  EXPECT_THROW((void)codec::decode_base(bs, *other), FormatError);
  auto wrong_split = bs;
  wrong_split.header.base_channels = 5;
  EXPECT_THROW((void)codec::decode_base(wrong_split, *m), FormatError);
}

TEST(Codec, CorruptedBaseIsDecodeError) {
  torch::NoGradGuard g;
  auto m = micro(11);
  auto bs = codec::compress(image(64, 64), *m).bitstream;
  bs.base.resize(bs.base.size() / 2);
  EXPECT_THROW((void)codec::decode_base(bs, *m), DecodeError);
}

TEST(Codec, UnpaddedInputRejected) {
  torch::NoGradGuard g;
  auto m = micro();
  EXPECT_THROW((void)codec::encode_image(image(60, 64), *m, 60, 64), ContractViolation);
}

TEST(Codec, OutputDimsMatchInputForOddSizes) {
  torch::NoGradGuard g;
  auto m = micro(12);
  for (auto [h, w] : {std::pair{1, 1}, std::pair{17, 130}, std::pair{64, 65}}) {
    const auto bs = codec::compress(image(h, w), *m).bitstream;
    const auto base = codec::decode_base(bs, *m);
    const auto full = codec::decode_full(bs, *m);
    EXPECT_EQ(base.height(), h);
    EXPECT_EQ(base.width(), w);
    EXPECT_EQ(full.height(), h);
    EXPECT_EQ(full.width(), w);
  }
}
