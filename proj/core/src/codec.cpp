#include "jicd/codec.hpp"

#include <climits>
#include <cmath>

#include "jicd/errors.hpp"
#include "jicd/latent_models.hpp"
#include "jicd/padding.hpp"

namespace jicd::codec {

using net::Layer;

namespace {

torch::ScalarType model_dtype(net::JicdModelImpl& model) {
  return model.hyper_density()->matrices().front().scalar_type();
}

LayerCodes empty_codes(int channels, int rows, int cols) {
  LayerCodes l;
  l.channels = channels;
  l.rows = rows;
  l.cols = cols;
  const auto n = static_cast<std::size_t>(channels) * rows * cols;
  l.symbols.assign(n, 0);
  l.values.assign(n, 0.0);
  return l;
}

torch::Tensor to_tensor(const LayerCodes& l, torch::ScalarType dtype) {
  auto t = torch::from_blob(const_cast<double*>(l.values.data()), {1, l.channels, l.rows, l.cols},
                            torch::kDouble);
  return t.to(dtype);
}

std::vector<double> to_doubles(const torch::Tensor& t) {
  auto d = t.detach().to(torch::kDouble).contiguous();
  return {d.data_ptr<double>(), d.data_ptr<double>() + d.numel()};
}

std::int32_t round_to_symbol(double v) {
  const double r = std::round(v);
  if (r > INT_MAX) return INT_MAX;
  if (r < INT_MIN) return INT_MIN;
  return static_cast<std::int32_t>(r);
}

// Hyper-latent: channel by channel, raster order within a channel.
template <typename CodeSymbol>
LayerCodes walk_hyper(const net::FactorizedCdf& prior, int rows, int cols, CodeSymbol&& code) {
  LayerCodes out = empty_codes(prior.channels(), rows, cols);
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  for (int c = 0; c < prior.channels(); ++c) {
    const auto model = prior.symbol_model(c);
    for (std::size_t k = 0; k < plane; ++k) {
      const std::size_t idx = c * plane + k;
      const std::int32_t s = code(idx, model);
      out.symbols[idx] = s;
      out.values[idx] = s;
      out.coded_bits += model.cost_bits(s);
      out.model_bits -= std::log2(std::max(prior.likelihood(c, s), entropy::kProbFloor));
    }
  }
  return out;
}

// Latent layer: raster order over positions, all channels at each position.
template <typename CodeSymbol>
LayerCodes walk_layer(const net::IncrementalEntropyParams& params, CodeSymbol&& code) {
  LayerCodes out = empty_codes(params.channels(), params.rows(), params.cols());
  const std::size_t plane = static_cast<std::size_t>(params.rows()) * params.cols();
  std::vector<double> mu(static_cast<std::size_t>(params.channels()));
  std::vector<double> sigma(mu.size());
  for (int n = 0; n < params.rows(); ++n) {
    for (int m = 0; m < params.cols(); ++m) {
      params.at(n, m, out.values, mu, sigma);
      for (int c = 0; c < params.channels(); ++c) {
        const std::size_t idx = c * plane + static_cast<std::size_t>(n) * params.cols() + m;
        const auto model = entropy::gaussian_symbol_model(sigma[c]);
        const std::int32_t s = code(idx, model, mu[c]);
        out.symbols[idx] = s;
        out.values[idx] = s + mu[c];
        out.coded_bits += model.cost_bits(s);
        out.model_bits -= std::log2(entropy::gaussian_bin_probability(out.values[idx], mu[c], sigma[c]));
      }
    }
  }
  return out;
}

struct Analysis {
  std::vector<double> y;  // (C, N, M)
  std::vector<double> z;  // (hw, N/4, M/4)
  int rows, cols, hyper_rows, hyper_cols;
};

Analysis analyze(const ImageBuffer& padded, net::JicdModelImpl& model) {
  auto x = net::to_tensor(padded).to(model_dtype(model));
  auto y = model.analysis(x);
  auto z = model.hyper_analysis(y);
  return {to_doubles(y), to_doubles(z), static_cast<int>(y.size(2)), static_cast<int>(y.size(3)),
          static_cast<int>(z.size(2)), static_cast<int>(z.size(3))};
}

// Runs the whole quantization walk. `enc` may be null (no range coding).
LatentCodes encode_walk(const Analysis& a, net::JicdModelImpl& model,
                        entropy::RangeEncoder* side_enc, entropy::RangeEncoder* base_enc,
                        entropy::RangeEncoder* enh_enc) {
  const auto& cfg = model.config();
  LatentCodes codes;
  const net::FactorizedCdf prior(*model.hyper_density());
  codes.hyper = walk_hyper(prior, a.hyper_rows, a.hyper_cols,
                           [&](std::size_t idx, const entropy::SymbolModel& sm) {
                             const std::int32_t s = round_to_symbol(a.z[idx]);
                             if (side_enc) sm.encode(*side_enc, s);
                             return s;
                           });
  const auto features = model.hyper_synthesis(to_tensor(codes.hyper, model_dtype(model)));

  const std::size_t plane = static_cast<std::size_t>(a.rows) * a.cols;
  auto code_layer = [&](Layer layer, int first_channel, entropy::RangeEncoder* enc) {
    const net::IncrementalEntropyParams params(model, layer, features);
    return walk_layer(params, [&](std::size_t idx, const entropy::SymbolModel& sm, double mu) {
      const double y = a.y[first_channel * plane + idx];
      const std::int32_t s = round_to_symbol(y - mu);
      if (enc) sm.encode(*enc, s);
      return s;
    });
  };
  codes.base = code_layer(Layer::base, 0, base_enc);
  codes.enhancement = cfg.enhancement_channels() > 0
                          ? code_layer(Layer::enhancement, cfg.base_channels, enh_enc)
                          : empty_codes(0, a.rows, a.cols);
  return codes;
}

void check_model(const BitstreamHeader& h, net::JicdModelImpl& model) {
  const auto& cfg = model.config();
  if (h.total_channels != cfg.total_channels || h.base_channels != cfg.base_channels) {
    throw FormatError("bitstream channel split (" + std::to_string(h.total_channels) + "/" +
                      std::to_string(h.base_channels) + ") does not match the model (" +
                      std::to_string(cfg.total_channels) + "/" +
                      std::to_string(cfg.base_channels) + ")");
  }
  if (h.model_id != net::model_id(model)) {
    throw FormatError("bitstream was produced by a different model (model id mismatch)");
  }
}

void require_consumed(const entropy::RangeDecoder& dec, std::size_t size, Substream s) {
  if (dec.position() != size) {
    throw DecodeError(to_string(s) + " substream has " + std::to_string(size - dec.position()) +
                      " undecoded trailing bytes; the data is corrupted");
  }
}

ImageBuffer synthesize(const torch::Tensor& image, const BitstreamHeader& h) {
  return eval::crop_back(net::to_image(image),
                         {static_cast<int>(h.orig_height), static_cast<int>(h.orig_width)});
}

}  // namespace

EncodeResult encode_image(const ImageBuffer& padded, net::JicdModelImpl& model, int orig_height,
                          int orig_width) {
  if (orig_height < 1 || orig_width < 1 || orig_height > padded.height() ||
      orig_width > padded.width() ||
      padded.height() != eval::next_multiple(orig_height) ||
      padded.width() != eval::next_multiple(orig_width)) {
    throw ContractViolation("encode_image: padded dims must be the next multiples of 64 of the "
                            "original dims");
  }
  torch::NoGradGuard no_grad;
  const auto a = analyze(padded, model);

  entropy::RangeEncoder side_enc, base_enc, enh_enc;
  EncodeResult result;
  result.codes = encode_walk(a, model, &side_enc, &base_enc, &enh_enc);

  const auto& cfg = model.config();
  auto& bs = result.bitstream;
  bs.header.orig_height = static_cast<std::uint32_t>(orig_height);
  bs.header.orig_width = static_cast<std::uint32_t>(orig_width);
  bs.header.total_channels = static_cast<std::uint16_t>(cfg.total_channels);
  bs.header.base_channels = static_cast<std::uint16_t>(cfg.base_channels);
  bs.header.model_id = net::model_id(model);
  bs.side = side_enc.finish();
  bs.base = base_enc.finish();
  if (cfg.enhancement_channels() > 0) bs.enhancement = enh_enc.finish();

  const auto& c = result.codes;
  result.coded_bits = {c.hyper.coded_bits, c.base.coded_bits, c.enhancement.coded_bits};
  result.model_bits = {c.hyper.model_bits, c.base.model_bits, c.enhancement.model_bits};
  return result;
}

EncodeResult compress(const ImageBuffer& image, net::JicdModelImpl& model) {
  const auto padded = eval::pad_to_64(image);
  return encode_image(padded.image, model, image.height(), image.width());
}

LatentCodes quantize_latents(const ImageBuffer& padded, net::JicdModelImpl& model) {
  torch::NoGradGuard no_grad;
  return encode_walk(analyze(padded, model), model, nullptr, nullptr, nullptr);
}

LatentCodes decode_latents(const BitstreamReader& reader, net::JicdModelImpl& model,
                           bool with_enhancement) {
  torch::NoGradGuard no_grad;
  const auto& h = reader.header();
  check_model(h, model);
  const auto& cfg = model.config();
  const int rows = static_cast<int>(h.padded_height()) / net::ModelConfig::kLatentStride;
  const int cols = static_cast<int>(h.padded_width()) / net::ModelConfig::kLatentStride;

  LatentCodes codes;
  {
    const auto bytes = reader.read(Substream::side);
    entropy::RangeDecoder dec(bytes);
    const net::FactorizedCdf prior(*model.hyper_density());
    codes.hyper = walk_hyper(prior, rows / net::ModelConfig::kHyperStride,
                             cols / net::ModelConfig::kHyperStride,
                             [&](std::size_t, const entropy::SymbolModel& sm) {
                               return sm.decode(dec);
                             });
    require_consumed(dec, bytes.size(), Substream::side);
  }
  const auto features = model.hyper_synthesis(to_tensor(codes.hyper, model_dtype(model)));

  auto decode_layer = [&](Layer layer, Substream s) {
    const auto bytes = reader.read(s);
    if (bytes.empty()) throw FormatError(to_string(s) + " substream is missing (empty)");
    entropy::RangeDecoder dec(bytes);
    const net::IncrementalEntropyParams params(model, layer, features);
    auto out = walk_layer(params, [&](std::size_t, const entropy::SymbolModel& sm, double) {
      return sm.decode(dec);
    });
    require_consumed(dec, bytes.size(), s);
    return out;
  };
  codes.base = decode_layer(Layer::base, Substream::base);
  if (with_enhancement && cfg.enhancement_channels() > 0) {
    codes.enhancement = decode_layer(Layer::enhancement, Substream::enhancement);
  } else {
    codes.enhancement = empty_codes(with_enhancement ? 0 : cfg.enhancement_channels(), rows, cols);
  }
  return codes;
}

ImageBuffer synthesize_base(const LatentCodes& codes, net::JicdModelImpl& model) {
  torch::NoGradGuard no_grad;
  return net::to_image(model.synthesize_base(to_tensor(codes.base, model_dtype(model))));
}

ImageBuffer synthesize_full(const LatentCodes& codes, net::JicdModelImpl& model) {
  torch::NoGradGuard no_grad;
  const auto dtype = model_dtype(model);
  auto y = net::merge_latent({to_tensor(codes.base, dtype), to_tensor(codes.enhancement, dtype)});
  return net::to_image(model.synthesize_full(y));
}

ImageBuffer decode_base(const ByteSource& source, net::JicdModelImpl& model) {
  const BitstreamReader reader(source);
  const auto codes = decode_latents(reader, model, false);
  return eval::crop_back(synthesize_base(codes, model),
                         {static_cast<int>(reader.header().orig_height),
                          static_cast<int>(reader.header().orig_width)});
}

ImageBuffer decode_full(const ByteSource& source, net::JicdModelImpl& model) {
  const BitstreamReader reader(source);
  const auto codes = decode_latents(reader, model, true);
  return eval::crop_back(synthesize_full(codes, model),
                         {static_cast<int>(reader.header().orig_height),
                          static_cast<int>(reader.header().orig_width)});
}

ImageBuffer decode_base(const ScalableBitstream& bs, net::JicdModelImpl& model) {
  return decode_base(MemorySource(serialize(bs)), model);
}

ImageBuffer decode_full(const ScalableBitstream& bs, net::JicdModelImpl& model) {
  return decode_full(MemorySource(serialize(bs)), model);
}

}  // namespace jicd::codec
