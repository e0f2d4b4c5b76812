// jicd: command-line front end for the joint compression and denoising codec.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "jicd/bitstream.hpp"
#include "jicd/codec.hpp"
#include "jicd/errors.hpp"
#include "jicd/eval_bench.hpp"
#include "jicd/noise_lab.hpp"
#include "jicd/run_config.hpp"
#include "jicd/synthetic.hpp"
#include "jicd/trainer.hpp"

namespace fs = std::filesystem;
using namespace jicd;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitMissingInput = 2;

/// Missing files map to exit code 2.
class MissingInput : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw MissingInput(what + " not found: " + p.string());
}

net::JicdModel load_checkpoint(const fs::path& path, double* lambda = nullptr) {
  require_file(path, "checkpoint");
  auto loaded = train::load_model(path);
  if (lambda) *lambda = loaded.meta.value("lambda", 0.0);
  loaded.model->eval();
  return loaded.model;
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

config::RunConfig resolve_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides,
                                 std::optional<std::uint64_t> seed) {
  config::KeyValues entries;
  if (!config_path.empty()) {
    require_file(config_path, "config");
    entries = config::read_key_values(config_path);
  }
  config::KeyValues ov;
  for (const auto& o : overrides) ov.push_back(config::parse_override(o));
  if (seed) ov.emplace_back("seed", std::to_string(*seed));
  return config::resolve(entries, ov);
}

void prepare_run_dir(const fs::path& dir, const config::RunConfig& cfg) {
  fs::create_directories(dir / "logs");
  fs::create_directories(dir / "artifacts");
  std::ofstream(dir / "config.resolved", std::ios::trunc) << config::to_text(cfg);
}

// ---------------------------------------------------------------------------

struct NoiseArgs {
  std::string in, out, kind = "awgn";
  double sigma = 50.0;
  std::uint64_t seed = 0;
  std::string clean;
  int synthetic = 0;
  int size = 128;
};

int cmd_noise(const NoiseArgs& a) {
  if (a.synthetic > 0) {
    fs::path dir = a.out;
    if (dir.empty()) {
      const char* cache = std::getenv("JICD_CACHE");
      dir = fs::path(cache ? cache : ".") / ("synthetic-" + std::to_string(a.seed));
    }
    fs::create_directories(dir);
    eval::DatasetManifest m{"synthetic", {}};
    for (int k = 0; k < a.synthetic; ++k) {
      const std::string name = "img" + std::to_string(k);
      write_png(dir / (name + ".png"), data::synthetic_image(a.size, a.size, a.seed, k));
      m.entries.push_back({name, name + ".png", std::nullopt});
    }
    eval::write_manifest(dir / "manifest.json", m);
    std::cout << "wrote " << a.synthetic << " images and " << (dir / "manifest.json").string() << '\n';
    return 0;
  }
  if (!a.clean.empty()) {
    require_file(a.in, "input");
    require_file(a.clean, "clean image");
    const auto est = noise::estimate_sigma(read_png(a.in), read_png(a.clean));
    std::cout << nlohmann::json{{"sigma", est.sigma}, {"degenerate", est.degenerate}}.dump() << '\n';
    return 0;
  }
  if (a.in.empty() || a.out.empty()) throw std::invalid_argument("noise needs --in and --out");
  require_file(a.in, "input");
  noise::NoiseSpec spec;
  spec.kind = noise::parse_noise_kind(a.kind);
  spec.sigma = a.sigma;
  spec.seed = a.seed;
  write_png(a.out, noise::apply(spec, read_png(a.in), 0));
  return 0;
}

struct TrainArgs {
  std::string config_path, out = "runs/train";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = resolve_config(a.config_path, a.overrides, a.seed);
  prepare_run_dir(a.out, cfg);
  std::vector<ImageBuffer> images;
  if (!cfg.manifest.empty()) {
    require_file(cfg.manifest, "manifest");
    images = eval::load_clean_images(eval::read_manifest(cfg.manifest));
  } else {
    images = data::synthetic_corpus(cfg.synthetic_count, cfg.synthetic_size, cfg.synthetic_size,
                                    cfg.synthetic_seed);
  }
  train::FitOptions opts;
  opts.run_dir = a.out;
  opts.resume = a.resume;
  opts.on_step = [](std::int64_t step, const train::LossBreakdown& p) {
    if (step % 50 == 0) {
      std::cout << "step " << step << "  L=" << p.total << "  bpp=" << p.bpp()
                << "  mse_denoise=" << p.mse_denoise << "  mse_noisy=" << p.mse_noisy << '\n';
    }
  };
  const auto result = train::fit(std::move(images), cfg.train, opts);
  std::cout << "trained " << result.steps << " steps, " << result.epochs << " epochs; model "
            << (fs::path(a.out) / "artifacts" / "model.jckpt").string() << '\n';
  return 0;
}

struct CodecArgs {
  std::string in, out, checkpoint, layer;
};

int cmd_encode(const CodecArgs& a) {
  if (a.layer != "both") throw std::invalid_argument("encode supports --layer=both only");
  require_file(a.in, "input");
  auto model = load_checkpoint(a.checkpoint);
  const auto image = read_png(a.in);
  const auto enc = codec::compress(image, *model);
  const auto bytes = serialize(enc.bitstream);
  write_file(a.out, bytes);
  const auto acc = eval::bpp_accounting(enc.bitstream);
  const auto& bs = enc.bitstream;
  nlohmann::json report{
      {"base_bpp", acc.base_bpp},
      {"full_bpp", acc.full_bpp},
      {"bytes", bytes.size()},
      {"actual_bits",
       {{"side", 8 * bs.side.size()}, {"base", 8 * bs.base.size()},
        {"enhancement", 8 * bs.enhancement.size()}}},
      {"estimated_bits",
       {{"side", enc.model_bits.side}, {"base", enc.model_bits.base},
        {"enhancement", enc.model_bits.enhancement}}},
      {"coded_bits",
       {{"side", enc.coded_bits.side}, {"base", enc.coded_bits.base},
        {"enhancement", enc.coded_bits.enhancement}}}};
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_decode(const CodecArgs& a) {
  if (a.layer != "base" && a.layer != "full") {
    throw std::invalid_argument("--layer must be base or full");
  }
  require_file(a.in, "bitstream");
  auto model = load_checkpoint(a.checkpoint);
  const FileSource source(a.in);
  const auto image = a.layer == "base" ? codec::decode_base(source, *model)
                                       : codec::decode_full(source, *model);
  write_png(a.out, image);
  return 0;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string manifest, config_path, out = "runs/eval";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

int cmd_eval(const EvalArgs& a) {
  const auto cfg = resolve_config(a.config_path, a.overrides, a.seed);
  require_file(a.manifest, "manifest");
  const auto manifest = eval::read_manifest(a.manifest);
  manifest.validate();
  std::vector<eval::EvalModel> models;
  for (const auto& c : a.checkpoints) {
    eval::EvalModel m;
    m.model = load_checkpoint(c, &m.lambda);
    models.push_back(m);
  }
  prepare_run_dir(a.out, cfg);
  auto spec = cfg.train.noise;
  spec.seed = spec.seed ^ cfg.train.seed;
  const auto results = eval::evaluate(models, manifest, spec);
  std::vector<eval::RDPoint> points;
  std::ofstream images(fs::path(a.out) / "artifacts" / "images.jsonl", std::ios::trunc);
  for (const auto& r : results) {
    points.push_back(r.denoise);
    points.push_back(r.noisy);
    for (const auto& ir : r.images) {
      images << nlohmann::json{{"model_id", r.model_id},
                               {"image", ir.name},
                               {"base_bpp", ir.base_bpp},
                               {"full_bpp", ir.full_bpp},
                               {"psnr_noisy_vs_clean", ir.psnr_noisy_vs_clean},
                               {"psnr_denoised_vs_clean", ir.psnr_denoised_vs_clean},
                               {"psnr_full_vs_noisy", ir.psnr_full_vs_noisy}}
                    .dump()
             << '\n';
    }
  }
  const auto curves_path = fs::path(a.out) / "artifacts" / "curves.jsonl";
  eval::write_points(curves_path, points);
  eval::write_plot_svg(fs::path(a.out) / "artifacts" / "rd.svg", eval::group_curves(points));
  for (const auto& p : points) std::cout << eval::to_json_line(p) << '\n';
  std::cout << "curves: " << curves_path.string() << '\n';
  return 0;
}

struct BdArgs {
  std::string anchor, test, task;
};

int cmd_bdrate(const BdArgs& a) {
  require_file(a.anchor, "anchor curve file");
  require_file(a.test, "test curve file");
  const auto anchors = eval::group_curves(eval::read_points(a.anchor));
  const auto tests = eval::group_curves(eval::read_points(a.test));
  std::vector<std::pair<std::string, eval::BDRateReport>> rows;
  for (const auto& t : tests) {
    if (!a.task.empty() && eval::to_string(t.task) != a.task) continue;
    for (const auto& an : anchors) {
      if (an.dataset != t.dataset || an.task != t.task) continue;
      const auto r = eval::bd_rate(an, t);
      rows.emplace_back(t.dataset + "/" + eval::to_string(t.task), r);
    }
  }
  if (rows.empty()) throw std::invalid_argument("no (dataset, task) curve pairs in common");
  std::cout << eval::format_bd_table(rows);
  for (const auto& [name, r] : rows) {
    std::cout << nlohmann::json{{"curve", name},
                                {"bd_rate_percent", r.percent},
                                {"psnr_low", r.psnr_low},
                                {"psnr_high", r.psnr_high},
                                {"anchor_fit_rms", r.anchor_fit_rms},
                                {"test_fit_rms", r.test_fit_rms}}
                     .dump()
              << '\n';
  }
  return 0;
}

struct PlotArgs {
  std::vector<std::string> curves;
  std::string out = "rd.svg";
};

int cmd_plot(const PlotArgs& a) {
  std::vector<eval::RDPoint> points;
  for (const auto& c : a.curves) {
    require_file(c, "curve file");
    const auto p = eval::read_points(c);
    points.insert(points.end(), p.begin(), p.end());
  }
  eval::write_plot_svg(a.out, eval::group_curves(points));
  std::cout << "wrote " << a.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint image compression and denoising codec"};
  app.require_subcommand(1);

  NoiseArgs noise_args;
  auto* noise = app.add_subcommand("noise", "Synthesize noise, estimate sigma, or build a synthetic corpus");
  noise->add_option("--in", noise_args.in, "Input PNG");
  noise->add_option("--out", noise_args.out, "Output PNG, or corpus directory with --synthetic");
  noise->add_option("--kind", noise_args.kind, "awgn | practical | variable_awgn");
  noise->add_option("--sigma", noise_args.sigma, "Noise std in 8-bit units");
  noise->add_option("--seed", noise_args.seed, "Random seed");
  noise->add_option("--clean", noise_args.clean, "Estimate the noise std of --in against this image");
  noise->add_option("--synthetic", noise_args.synthetic, "Write this many synthetic clean images");
  noise->add_option("--size", noise_args.size, "Synthetic image side length");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", train_args.config_path, "key = value config file");
  train->add_option("--override", train_args.overrides, "dotted.key=value (repeatable)");
  train->add_option("--seed", train_args.seed, "Seed (overrides the config)");
  train->add_option("--out", train_args.out, "Run directory");
  train->add_flag("--resume", train_args.resume, "Continue from the run directory's checkpoint");

  CodecArgs enc_args{"", "", "", "both"};
  auto* encode = app.add_subcommand("encode", "Encode a noisy PNG");
  encode->add_option("--in", enc_args.in, "Input PNG")->required();
  encode->add_option("--checkpoint", enc_args.checkpoint, "Model file")->required();
  encode->add_option("--out", enc_args.out, "Output bitstream")->required();
  encode->add_option("--layer", enc_args.layer, "both");

  CodecArgs dec_args{"", "", "", "base"};
  auto* decode = app.add_subcommand("decode", "Decode a bitstream");
  decode->add_option("--in", dec_args.in, "Input bitstream")->required();
  decode->add_option("--checkpoint", dec_args.checkpoint, "Model file")->required();
  decode->add_option("--out", dec_args.out, "Output PNG")->required();
  decode->add_option("--layer", dec_args.layer, "base (denoised) | full (noisy reconstruction)");

  EvalArgs eval_args;
  auto* evalc = app.add_subcommand("eval", "Rate-PSNR evaluation of checkpoints on a manifest");
  evalc->add_option("--checkpoint", eval_args.checkpoints, "Model file (repeatable)")->required();
  evalc->add_option("--manifest", eval_args.manifest, "Dataset manifest")->required();
  evalc->add_option("--config", eval_args.config_path, "Config with noise settings");
  evalc->add_option("--override", eval_args.overrides, "dotted.key=value (repeatable)");
  evalc->add_option("--seed", eval_args.seed, "Seed for synthesized noise");
  evalc->add_option("--out", eval_args.out, "Run directory");

  BdArgs bd_args;
  auto* bdrate = app.add_subcommand("bdrate", "BD-rate of test curves against anchor curves");
  bdrate->add_option("--anchor", bd_args.anchor, "Anchor curve file")->required();
  bdrate->add_option("--test", bd_args.test, "Test curve file")->required();
  bdrate->add_option("--task", bd_args.task, "Restrict to denoise or noisy_recon");

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Rate-PSNR figure from curve files");
  plot->add_option("--curves", plot_args.curves, "Curve file (repeatable)")->required();
  plot->add_option("--out", plot_args.out, "Output SVG");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*noise) return cmd_noise(noise_args);
    if (*train) return cmd_train(train_args);
    if (*encode) return cmd_encode(enc_args);
    if (*decode) return cmd_decode(dec_args);
    if (*evalc) return cmd_eval(eval_args);
    if (*bdrate) return cmd_bdrate(bd_args);
    if (*plot) return cmd_plot(plot_args);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
