#pragma once

#include <cstdint>
#include <vector>

#include "jicd/bitstream.hpp"
#include "jicd/codec_net.hpp"
#include "jicd/entropy_models.hpp"
#include "jicd/image.hpp"

namespace jicd::codec {

/// Quantized values of one coded tensor, (channels, rows, cols) row-major.
struct LayerCodes {
  int channels = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::int32_t> symbols;  ///< integers handed to the range coder
  std::vector<double> values;         ///< dequantized values (symbol + mean)
  double coded_bits = 0.0;            ///< -log2 of the coded frequencies, plus bypass bits
  double model_bits = 0.0;            ///< -log2 of the continuous-model bin probabilities
};

struct LatentCodes {
  LayerCodes hyper;
  LayerCodes base;
  LayerCodes enhancement;
};

struct EncodeResult {
  ScalableBitstream bitstream;
  LatentCodes codes;
  entropy::RateBreakdown coded_bits;
  entropy::RateBreakdown model_bits;
};

/// Encodes a padded noisy image (dims multiples of 64) into the scalable
/// container; `orig_height`/`orig_width` go into the header.
///
/// Coding order: side (hyper-latent under the factorized prior), then each
/// layer in raster order with all of the layer's channels coded per position.
/// Base and enhancement use separate coders and separate entropy models, so
/// either substream can be decoded from the side stream alone.
EncodeResult encode_image(const ImageBuffer& padded, net::JicdModelImpl& model, int orig_height,
                          int orig_width);

/// Pads (reflect, to multiples of 64) and encodes.
EncodeResult compress(const ImageBuffer& image, net::JicdModelImpl& model);

/// The quantized latents the encoder produces, without running the range
/// coder. Used to cross-check the entropy-coding path.
LatentCodes quantize_latents(const ImageBuffer& padded, net::JicdModelImpl& model);

/// Entropy-decodes the side and base substreams, and the enhancement one when
/// `with_enhancement`. Throws FormatError on header/model mismatch or a missing
/// substream, DecodeError on corrupted coded data.
LatentCodes decode_latents(const BitstreamReader& reader, net::JicdModelImpl& model,
                           bool with_enhancement);

/// Denoised image from side + base only, cropped to the original dims.
ImageBuffer decode_base(const ByteSource& source, net::JicdModelImpl& model);
ImageBuffer decode_base(const ScalableBitstream& bs, net::JicdModelImpl& model);

/// Reconstruction of the noisy input from all three substreams.
ImageBuffer decode_full(const ByteSource& source, net::JicdModelImpl& model);
ImageBuffer decode_full(const ScalableBitstream& bs, net::JicdModelImpl& model);

/// Synthesis of the padded-size image from already decoded codes.
ImageBuffer synthesize_base(const LatentCodes& codes, net::JicdModelImpl& model);
ImageBuffer synthesize_full(const LatentCodes& codes, net::JicdModelImpl& model);

}  // namespace jicd::codec
