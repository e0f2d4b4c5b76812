// Regenerates the frozen golden fixture in tests/data. Run once by hand;
// the outputs are committed and compared bit-exactly by the tests.

#include <fstream>
#include <iostream>

#include "jicd/codec.hpp"
#include "jicd/noise_lab.hpp"
#include "jicd/synthetic.hpp"
#include "jicd/trainer.hpp"
#include "test_support.hpp"

using namespace jicd;
using testing::Golden;

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : testing::data_dir();
  net::JicdModel model(testing::micro_config(), Golden::kModelSeed);
  train::save_model(*model, dir / "golden_model.jckpt", {{"lambda", 0.013}});
  // Reload so the fixture reflects exactly what the file stores.
  auto loaded = train::load_model(dir / "golden_model.jckpt").model;

  const auto clean = data::synthetic_image(Golden::kHeight, Golden::kWidth, Golden::kImageSeed, 0);
  const auto noisy = noise::synth_awgn(clean, Golden::kSigma, Golden::kNoiseSeed);
  write_png(dir / "golden_noisy.png", noisy);

  const auto enc = codec::compress(noisy, *loaded);
  const auto bytes = serialize(enc.bitstream);
  std::ofstream(dir / "golden.jicd", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  write_png(dir / "golden_base.png", codec::decode_base(enc.bitstream, *loaded));
  write_png(dir / "golden_full.png", codec::decode_full(enc.bitstream, *loaded));

  const auto& h = enc.bitstream.header;
  std::cout << "orig " << h.orig_height << "x" << h.orig_width << " C=" << h.total_channels
            << " i=" << h.base_channels << " model_id=0x" << std::hex << h.model_id << std::dec
            << " side=" << enc.bitstream.side.size() << " base=" << enc.bitstream.base.size()
            << " enh=" << enc.bitstream.enhancement.size() << " total=" << bytes.size() << '\n';
}
