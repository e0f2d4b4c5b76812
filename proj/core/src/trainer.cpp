#include "jicd/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "jicd/errors.hpp"
#include "jicd/rng.hpp"

namespace jicd::train {

namespace fs = std::filesystem;

TrainConfig TrainConfig::toy() {
  TrainConfig c;
  c.model = net::ModelConfig::toy();
  c.crop = 64;
  c.batch = 8;
  c.lr_init = 1e-3;
  return c;
}

void TrainConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  if (crop < net::ModelConfig::kPadMultiple || crop % net::ModelConfig::kPadMultiple != 0) {
    throw std::invalid_argument("crop must be a positive multiple of 64");
  }
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr_init >= 0.0)) throw std::invalid_argument("lr_init must be >= 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw std::invalid_argument("lr_factor must lie in (0, 1)");
  if (plateau_patience < 1) throw std::invalid_argument("plateau_patience must be >= 1");
  if (!(plateau_threshold >= 0.0)) throw std::invalid_argument("plateau_threshold must be >= 0");
  if (steps_per_epoch < 0 || max_steps < 0) {
    throw std::invalid_argument("steps_per_epoch and max_steps must be >= 0");
  }
  noise.validate();
  model.validate();
}

// ---------------------------------------------------------------------------

double LossBreakdown::recomputed_total() const {
  return rd_loss(rate_bits(), distortion, lambda, num_pixels);
}

std::string LossBreakdown::to_json() const {
  nlohmann::json j{{"L", total},          {"R_side", rate_side},   {"R_base", rate_base},
                   {"R_enh", rate_enh},   {"num_pixels", num_pixels},
                   {"mse_denoise", mse_denoise}, {"mse_noisy", mse_noisy},
                   {"D", distortion},     {"lambda", lambda},      {"w", w}};
  return j.dump();
}

torch::Tensor mse255(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) throw std::invalid_argument("mse255: shape mismatch");
  return (a - b).square().mean() * (255.0 * 255.0);
}

torch::Tensor distortion(const torch::Tensor& x, const torch::Tensor& x_hat,
                         const torch::Tensor& xn, const torch::Tensor& xn_hat, double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  return (1.0 - w) * mse255(x, x_hat) + w * mse255(xn, xn_hat);
}

double distortion(const ImageBuffer& x, const ImageBuffer& x_hat, const ImageBuffer& xn,
                  const ImageBuffer& xn_hat, double w) {
  if (!x.same_shape(x_hat) || !xn.same_shape(xn_hat) || !x.same_shape(xn)) {
    throw std::invalid_argument("distortion: shape mismatch");
  }
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("w must lie in [0, 1]");
  auto mse = [](const ImageBuffer& a, const ImageBuffer& b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = 255.0 * (static_cast<double>(a.values()[k]) - b.values()[k]);
      acc += d * d;
    }
    return acc / static_cast<double>(a.size());
  };
  return (1.0 - w) * mse(x, x_hat) + w * mse(xn, xn_hat);
}

double rd_loss(double rate_bits, double d, double lambda, double num_pixels) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(rate_bits >= 0.0)) throw std::invalid_argument("rate must be >= 0");
  if (!(num_pixels > 0.0)) throw std::invalid_argument("num_pixels must be > 0");
  return rate_bits / num_pixels + lambda * d;
}

torch::Tensor rd_loss(const torch::Tensor& rate_bits, const torch::Tensor& d, double lambda,
                      double num_pixels) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(num_pixels > 0.0)) throw std::invalid_argument("num_pixels must be > 0");
  return rate_bits / num_pixels + lambda * d;
}

LossValue compute_loss(net::JicdModelImpl& model, const torch::Tensor& clean,
                       const torch::Tensor& noisy, const net::TrainNoise& noise, double lambda,
                       double w, net::BoundGradient bound) {
  const auto out = model.forward_train(noisy, noise, bound);
  auto bits = [](const torch::Tensor& p) {
    return p.numel() > 0 ? -torch::log2(p).sum() : torch::zeros({}, p.options());
  };
  const auto r_side = bits(out.likelihood_hyper);
  const auto r_base = bits(out.likelihood_base);
  const auto r_enh = bits(out.likelihood_enhancement);
  const auto mse_d = mse255(clean, out.x_denoised);
  const auto mse_n = mse255(noisy, out.x_reconstructed);
  const auto d = (1.0 - w) * mse_d + w * mse_n;
  const double num_pixels = static_cast<double>(clean.size(0) * clean.size(2) * clean.size(3));

  LossValue v;
  v.loss = rd_loss(r_side + r_base + r_enh, d, lambda, num_pixels);
  auto& p = v.parts;
  p.total = v.loss.item<double>();
  p.rate_side = r_side.item<double>();
  p.rate_base = r_base.item<double>();
  p.rate_enh = r_enh.item<double>();
  p.num_pixels = num_pixels;
  p.mse_denoise = mse_d.item<double>();
  p.mse_noisy = mse_n.item<double>();
  p.distortion = d.item<double>();
  p.lambda = lambda;
  p.w = w;
  return v;
}

NonFiniteLoss::NonFiniteLoss(std::int64_t step, const LossBreakdown& parts)
    : std::runtime_error("non-finite loss at step " + std::to_string(step) + ": " +
                         parts.to_json()),
      parts_(parts) {}

// ---------------------------------------------------------------------------

PlateauScheduler::PlateauScheduler(double factor, int patience, double threshold)
    : factor_(factor),
      patience_(patience),
      threshold_(threshold),
      best_(std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::observe(double loss) {
  if (loss < best_ * (1.0 - threshold_) || !std::isfinite(best_)) {
    best_ = loss;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ < patience_) return false;
  bad_epochs_ = 0;
  ++decays_;
  return true;
}

nlohmann::json PlateauScheduler::state() const {
  return {{"best", std::isfinite(best_) ? nlohmann::json(best_) : nlohmann::json(nullptr)},
          {"bad_epochs", bad_epochs_},
          {"decays", decays_}};
}

void PlateauScheduler::load_state(const nlohmann::json& j) {
  best_ = j.at("best").is_null() ? std::numeric_limits<double>::infinity()
                                 : j.at("best").get<double>();
  bad_epochs_ = j.at("bad_epochs").get<int>();
  decays_ = j.at("decays").get<int>();
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig config, std::vector<ImageBuffer> images)
    : config_(std::move(config)),
      images_(std::move(images)),
      scheduler_(config_.lr_factor, config_.plateau_patience, config_.plateau_threshold) {
  config_.validate();
  if (images_.empty()) throw std::invalid_argument("training set is empty");
  for (const auto& img : images_) {
    if (img.height() < config_.crop || img.width() < config_.crop) {
      throw std::invalid_argument("training image " + std::to_string(img.height()) + "x" +
                                  std::to_string(img.width()) + " is smaller than the crop " +
                                  std::to_string(config_.crop));
    }
  }
  torch::manual_seed(derive_seed(config_.seed, {0x70C4ULL}));
  model_ = net::JicdModel(config_.model, config_.seed);
  optimizer_ = std::make_unique<torch::optim::Adam>(model_->parameters(),
                                                    torch::optim::AdamOptions(config_.lr_init));
}

int Trainer::steps_per_epoch() const {
  if (config_.steps_per_epoch > 0) return config_.steps_per_epoch;
  return static_cast<int>((images_.size() + config_.batch - 1) / config_.batch);
}

double Trainer::lr() const {
  return static_cast<const torch::optim::AdamOptions&>(optimizer_->param_groups().front().options())
      .lr();
}

void Trainer::set_lr(double lr) {
  for (auto& group : optimizer_->param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

Batch Trainer::make_batch(std::int64_t k) const {
  Rng rng(derive_seed(config_.seed, {0xBA7CULL, static_cast<std::uint64_t>(k)}));
  std::uniform_int_distribution<std::size_t> pick(0, images_.size() - 1);
  Batch batch;
  if (config_.noise.kind == noise::NoiseKind::variable_awgn) {
    batch.sigma = noise::sigma_for_iteration(config_.noise, static_cast<std::uint64_t>(k));
  } else if (config_.noise.kind == noise::NoiseKind::awgn) {
    batch.sigma = config_.noise.sigma;
  }
  std::vector<torch::Tensor> clean, noisy;
  for (int b = 0; b < config_.batch; ++b) {
    const auto& img = images_[pick(rng)];
    std::uniform_int_distribution<int> py(0, img.height() - config_.crop);
    std::uniform_int_distribution<int> px(0, img.width() - config_.crop);
    const int y0 = py(rng);
    const int x0 = px(rng);
    const auto c = crop(img, y0, x0, config_.crop, config_.crop);
    const std::uint64_t stream =
        derive_seed(config_.seed, {0x4015EULL, static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(b)});
    const double override_sigma =
        config_.noise.kind == noise::NoiseKind::practical ? -1.0 : batch.sigma;
    clean.push_back(net::to_tensor(c));
    noisy.push_back(net::to_tensor(noise::apply(config_.noise, c, stream, override_sigma)));
  }
  batch.clean = torch::cat(clean);
  batch.noisy = torch::cat(noisy);
  return batch;
}

LossBreakdown Trainer::step() {
  const auto batch = make_batch(step_);
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(
      derive_seed(config_.seed, {0x0A17ULL, static_cast<std::uint64_t>(step_)}));
  const auto noise = model_->sample_noise(config_.batch, config_.crop, config_.crop, gen);
  model_->train();
  optimizer_->zero_grad();
  auto value = compute_loss(*model_, batch.clean, batch.noisy, noise, config_.lambda, config_.w);
  if (!std::isfinite(value.parts.total)) throw NonFiniteLoss(step_, value.parts);
  value.loss.backward();
  optimizer_->step();
  ++step_;
  return value.parts;
}

double Trainer::run_epoch(const std::function<void(std::int64_t, const LossBreakdown&)>& on_step) {
  const int per_epoch = steps_per_epoch();
  while (epoch_steps_done_ < per_epoch) {
    if (config_.max_steps > 0 && step_ >= config_.max_steps) {
      return epoch_loss_sum_ / std::max(epoch_steps_done_, 1);
    }
    const auto parts = step();
    epoch_loss_sum_ += parts.total;
    ++epoch_steps_done_;
    if (on_step) on_step(step_, parts);
  }
  const double mean = epoch_loss_sum_ / per_epoch;
  if (scheduler_.observe(mean)) set_lr(lr() * config_.lr_factor);
  ++epoch_;
  epoch_loss_sum_ = 0.0;
  epoch_steps_done_ = 0;
  return mean;
}

namespace {

nlohmann::json config_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},       {"w", c.w},
          {"crop", c.crop},           {"batch", c.batch},
          {"epochs", c.epochs},       {"lr_init", c.lr_init},
          {"lr_factor", c.lr_factor}, {"plateau_patience", c.plateau_patience},
          {"plateau_threshold", c.plateau_threshold},
          {"steps_per_epoch", c.steps_per_epoch},
          {"seed", c.seed},           {"model", c.model},
          {"noise", {{"kind", noise::to_string(c.noise.kind)},
                     {"sigma", c.noise.sigma},
                     {"sigma_set", c.noise.sigma_set},
                     {"a", c.noise.a},
                     {"b", c.noise.b},
                     {"exact_poisson", c.noise.exact_poisson},
                     {"seed", c.noise.seed}}}};
}

}  // namespace

void Trainer::save_checkpoint(const fs::path& path) const {
  torch::serialize::OutputArchive archive;
  optimizer_->save(archive);
  std::ostringstream blob;
  archive.save_to(blob);
  nlohmann::json meta{{"lambda", config_.lambda},
                      {"train_config", config_json(config_)},
                      {"progress",
                       {{"step", step_},
                        {"epoch", epoch_},
                        {"epoch_loss_sum", epoch_loss_sum_},
                        {"epoch_steps_done", epoch_steps_done_},
                        {"lr", lr()},
                        {"scheduler", scheduler_.state()}}}};
  const fs::path tmp = path.string() + ".tmp";
  save_model(*model_, tmp, meta, blob.str());
  fs::rename(tmp, path);
}

void Trainer::load_checkpoint(const fs::path& path) {
  auto loaded = load_model(path);
  if (loaded.meta.at("train_config") != config_json(config_)) {
    throw FormatError("checkpoint " + path.string() + " was written with a different training "
                      "config");
  }
  {
    torch::NoGradGuard no_grad;
    const auto src = loaded.model->sorted_parameters();
    const auto dst = model_->sorted_parameters();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k].second.copy_(src[k].second);
  }
  torch::serialize::InputArchive archive;
  std::istringstream blob(loaded.extra_blob);
  archive.load_from(blob);
  optimizer_->load(archive);
  const auto& p = loaded.meta.at("progress");
  step_ = p.at("step").get<std::int64_t>();
  epoch_ = p.at("epoch").get<int>();
  epoch_loss_sum_ = p.at("epoch_loss_sum").get<double>();
  epoch_steps_done_ = p.at("epoch_steps_done").get<int>();
  set_lr(p.at("lr").get<double>());
  scheduler_.load_state(p.at("scheduler"));
}

// ---------------------------------------------------------------------------

FitResult fit(std::vector<ImageBuffer> images, const TrainConfig& config,
              const FitOptions& options) {
  if (images.empty()) throw std::invalid_argument("fit: the dataset is empty");
  Trainer trainer(config, std::move(images));
  std::ofstream log;
  fs::path checkpoint;
  if (!options.run_dir.empty()) {
    fs::create_directories(options.run_dir / "logs");
    fs::create_directories(options.run_dir / "artifacts");
    checkpoint = options.run_dir / "artifacts" / "checkpoint.jckpt";
    if (options.resume && fs::exists(checkpoint)) trainer.load_checkpoint(checkpoint);
    log.open(options.run_dir / "logs" / "train.jsonl",
             options.resume ? std::ios::app : std::ios::trunc);
  }
  FitResult result;
  auto on_step = [&](std::int64_t step, const LossBreakdown& parts) {
    if (log) {
      nlohmann::json rec{{"step", step},
                         {"L", parts.total},
                         {"R_side", parts.rate_side},
                         {"R_base", parts.rate_base},
                         {"R_enh", parts.rate_enh},
                         {"mse_denoise", parts.mse_denoise},
                         {"mse_noisy", parts.mse_noisy},
                         {"lr", trainer.lr()}};
      log << rec.dump() << '\n';
    }
    if (options.on_step) options.on_step(step, parts);
  };
  auto done = [&] {
    return trainer.epoch() >= config.epochs ||
           (config.max_steps > 0 && trainer.step_count() >= config.max_steps);
  };
  while (!done()) {
    const int before = trainer.epoch();
    const double mean = trainer.run_epoch(on_step);
    if (trainer.epoch() > before) result.epoch_losses.push_back(mean);
    if (!checkpoint.empty()) {
      log.flush();
      trainer.save_checkpoint(checkpoint);
    }
  }
  if (!options.run_dir.empty()) {
    save_model(trainer.model(), options.run_dir / "artifacts" / "model.jckpt",
               {{"lambda", config.lambda}, {"steps", trainer.step_count()}});
  }
  result.model = trainer.model_handle();
  result.steps = trainer.step_count();
  result.epochs = trainer.epoch();
  result.final_lr = trainer.lr();
  return result;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is, const fs::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw FormatError("model file " + path.string() + " is truncated");
  }
  return v;
}

}  // namespace

void save_model(const net::JicdModelImpl& model, const fs::path& path, const nlohmann::json& meta,
                const std::string& extra_blob) {
  nlohmann::json j = meta;
  j["config"] = model.config();
  nlohmann::json index = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  for (const auto& [name, t] : model.sorted_parameters()) {
    auto f = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    index.push_back({{"name", name}, {"shape", f.sizes().vec()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(f.numel()) * sizeof(float);
    blobs.push_back(f);
  }
  j["tensors"] = index;
  j["extra"] = {{"offset", offset}, {"size", extra_blob.size()}};
  const std::string header = j.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write model file " + path.string());
  os.write(ModelFile::kMagic, sizeof ModelFile::kMagic);
  put<std::uint32_t>(os, ModelFile::kVersion);
  put<std::uint64_t>(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& f : blobs) {
    os.write(reinterpret_cast<const char*>(f.data_ptr<float>()),
             static_cast<std::streamsize>(f.numel() * sizeof(float)));
  }
  os.write(extra_blob.data(), static_cast<std::streamsize>(extra_blob.size()));
  if (!os) throw std::runtime_error("failed writing model file " + path.string());
}

LoadedModel load_model(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof ModelFile::kMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, ModelFile::kMagic, sizeof magic) != 0) {
    throw FormatError(path.string() + " is not a JICD model file (bad magic)");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != ModelFile::kVersion) {
    throw FormatError("model file " + path.string() + " has version " + std::to_string(version) +
                      " (expected " + std::to_string(ModelFile::kVersion) + ")");
  }
  const auto header_size = get<std::uint64_t>(is, path);
  std::string header(header_size, '\0');
  if (!is.read(header.data(), static_cast<std::streamsize>(header_size))) {
    throw FormatError("model file " + path.string() + " is truncated");
  }
  LoadedModel out;
  try {
    out.meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model file " + path.string() + " has a corrupt header: " + e.what());
  }
  const auto config = out.meta.at("config").get<net::ModelConfig>();
  out.model = net::JicdModel(config, 0);
  const std::streamoff data_start = is.tellg();

  torch::NoGradGuard no_grad;
  auto params = out.model->sorted_parameters();
  const auto& index = out.meta.at("tensors");
  if (index.size() != params.size()) {
    throw FormatError("model file " + path.string() + " has " + std::to_string(index.size()) +
                      " tensors, the model expects " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& entry = index[k];
    auto& [name, t] = params[k];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<std::vector<std::int64_t>>() != t.sizes().vec()) {
      throw FormatError("model file " + path.string() + ": tensor '" + name +
                        "' is missing or has the wrong shape");
    }
    auto f = torch::empty(t.sizes(), torch::kFloat32);
    is.seekg(data_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    if (!is.read(reinterpret_cast<char*>(f.data_ptr<float>()),
                 static_cast<std::streamsize>(f.numel() * sizeof(float)))) {
      throw FormatError("model file " + path.string() + " is truncated");
    }
    t.copy_(f);
  }
  const auto& extra = out.meta.at("extra");
  out.extra_blob.resize(extra.at("size").get<std::size_t>());
  is.seekg(data_start + static_cast<std::streamoff>(extra.at("offset").get<std::uint64_t>()));
  if (!out.extra_blob.empty() &&
      !is.read(out.extra_blob.data(), static_cast<std::streamsize>(out.extra_blob.size()))) {
    throw FormatError("model file " + path.string() + " is truncated");
  }
  out.meta.erase("tensors");
  out.meta.erase("extra");
  return out;
}

// ---------------------------------------------------------------------------

GradientCheckReport gradient_check(const net::ModelConfig& model_config, std::uint64_t seed,
                                   int samples, double step, double tolerance, double abs_floor) {
  torch::manual_seed(seed);
  net::JicdModel model(model_config, seed);
  model->to(torch::kDouble);
  const int size = net::ModelConfig::kPadMultiple;
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(derive_seed(seed, {0x6C4EULL}));
  const auto opts = torch::TensorOptions().dtype(torch::kDouble);
  // Smooth clean content plus noise keeps the loss in a realistic regime.
  auto coarse = torch::rand({1, 3, 4, 4}, gen, opts);
  auto clean = torch::nn::functional::interpolate(
      coarse, torch::nn::functional::InterpolateFuncOptions()
                  .size(std::vector<std::int64_t>{size, size})
                  .mode(torch::kBilinear)
                  .align_corners(false));
  auto noisy = (clean + 0.1 * torch::randn(clean.sizes(), gen, opts)).clamp(0.0, 1.0);
  auto noise = model->sample_noise(1, size, size, gen);
  noise.latent = noise.latent.to(torch::kDouble);
  noise.hyper = noise.hyper.to(torch::kDouble);

  const double lambda = 0.013;
  const double w = kDefaultW;
  auto loss_at = [&] {
    return compute_loss(*model, clean, noisy, noise, lambda, w, net::BoundGradient::exact).loss;
  };
  model->zero_grad();
  loss_at().backward();

  // Candidate entries: every parameter element except taps the causal mask
  // removes (their gradient is identically zero).
  struct Entry {
    std::string name;
    torch::Tensor param;
    torch::Tensor mask;  // undefined unless a masked convolution weight
  };
  std::vector<Entry> entries;
  std::vector<std::int64_t> cumulative;
  std::int64_t total = 0;
  for (const auto& [name, t] : model->sorted_parameters()) {
    Entry e{name, t, {}};
    for (auto layer : {net::Layer::base, net::Layer::enhancement}) {
      if (model->layer_channels(layer) == 0) continue;
      auto& ctx = model->context_model(layer);
      if (t.is_same(ctx->named_parameters()["weight"])) e.mask = ctx->mask();
    }
    entries.push_back(e);
    total += t.numel();
    cumulative.push_back(total);
  }

  GradientCheckReport report;
  Rng rng(derive_seed(seed, {0x6C4EULL, 1}));
  std::uniform_int_distribution<std::int64_t> pick(0, total - 1);
  torch::NoGradGuard no_grad;
  while (report.samples < samples) {
    const std::int64_t flat = pick(rng);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), flat);
    const auto k = static_cast<std::size_t>(it - cumulative.begin());
    const std::int64_t local = flat - (k == 0 ? 0 : cumulative[k - 1]);
    auto& e = entries[k];
    if (e.mask.defined()) {
      const auto kk = e.param.size(2) * e.param.size(3);
      if (e.mask.view(-1)[local % kk].item<double>() == 0.0) continue;
    }
    auto values = e.param.view(-1);
    const double analytic = e.param.grad().view(-1)[local].item<double>();
    const double original = values[local].item<double>();
    values[local] = original + step;
    const double plus = loss_at().item<double>();
    values[local] = original - step;
    const double minus = loss_at().item<double>();
    values[local] = original;
    const double numeric = (plus - minus) / (2.0 * step);
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), abs_floor});
    report.entries.push_back({e.name, local, analytic, numeric, rel});
    report.worst_relative_error = std::max(report.worst_relative_error, rel);
    if (rel < tolerance) ++report.passed;
    ++report.samples;
  }
  return report;
}

}  // namespace jicd::train
