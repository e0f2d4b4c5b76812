#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jicd/codec_net.hpp"
#include "jicd/image.hpp"
#include "jicd/model_config.hpp"
#include "jicd/noise_lab.hpp"

namespace jicd::train {

/// The six rate-distortion trade-offs of the reference model sweep.
inline constexpr std::array<double, 6> kLambdaLadder{0.0035, 0.0067, 0.013, 0.025, 0.0483, 0.09};
/// Weight of the noisy-reconstruction task in the distortion.
inline constexpr double kDefaultW = 0.05;

struct TrainConfig {
  double lambda = 0.013;
  double w = kDefaultW;
  int crop = 256;
  int batch = 16;
  int epochs = 300;
  double lr_init = 1e-4;
  double lr_factor = 0.5;
  int plateau_patience = 10;      ///< epochs without enough improvement before decaying
  double plateau_threshold = 1e-3;  ///< relative improvement that resets patience
  int steps_per_epoch = 0;        ///< 0: ceil(dataset size / batch)
  std::int64_t max_steps = 0;     ///< 0: no limit beyond `epochs`
  noise::NoiseSpec noise;
  net::ModelConfig model;
  std::uint64_t seed = 0;

  /// Desk-scale settings: toy model, 64x64 crops, batch 8, lr 1e-3.
  static TrainConfig toy();

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Scalar view of one loss evaluation.
struct LossBreakdown {
  double total = 0.0;
  double rate_side = 0.0;  ///< bits
  double rate_base = 0.0;
  double rate_enh = 0.0;
  double num_pixels = 0.0;
  double mse_denoise = 0.0;  ///< 255-scale MSE(clean, denoised)
  double mse_noisy = 0.0;    ///< 255-scale MSE(noisy, reconstruction)
  double distortion = 0.0;
  double lambda = 0.0;
  double w = 0.0;

  double rate_bits() const { return rate_side + rate_base + rate_enh; }
  double bpp() const { return rate_bits() / num_pixels; }
  /// R / num_pixels + lambda * D, recomputed from the parts.
  double recomputed_total() const;
  std::string to_json() const;
};

/// Mean squared error on the 0..255 scale of images given in [0,1].
torch::Tensor mse255(const torch::Tensor& a, const torch::Tensor& b);

/// (1 - w) * MSE(x, x_hat) + w * MSE(xn, xn_hat). Throws std::invalid_argument
/// on shape mismatch or w outside [0, 1].
torch::Tensor distortion(const torch::Tensor& x, const torch::Tensor& x_hat,
                         const torch::Tensor& xn, const torch::Tensor& xn_hat, double w);
double distortion(const ImageBuffer& x, const ImageBuffer& x_hat, const ImageBuffer& xn,
                  const ImageBuffer& xn_hat, double w);

/// R_bits / num_pixels + lambda * D. Throws on lambda <= 0, R_bits < 0 or
/// num_pixels <= 0.
double rd_loss(double rate_bits, double d, double lambda, double num_pixels);
torch::Tensor rd_loss(const torch::Tensor& rate_bits, const torch::Tensor& d, double lambda,
                      double num_pixels);

struct LossValue {
  torch::Tensor loss;
  LossBreakdown parts;
};

/// Loss of one forward pass over (clean, noisy) batches in [0,1], NCHW.
LossValue compute_loss(net::JicdModelImpl& model, const torch::Tensor& clean,
                       const torch::Tensor& noisy, const net::TrainNoise& noise, double lambda,
                       double w, net::BoundGradient bound = net::BoundGradient::straight_through);

/// Thrown when a loss evaluation produces a non-finite value.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::int64_t step, const LossBreakdown& parts);
  const LossBreakdown& parts() const { return parts_; }

 private:
  LossBreakdown parts_;
};

/// ReduceLROnPlateau in "min" mode with a relative threshold, stepped once per
/// epoch on the mean training loss.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor, int patience, double threshold);

  /// Records an epoch loss; returns true when the learning rate should decay.
  bool observe(double loss);

  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  int decays() const { return decays_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j);

 private:
  double factor_;
  int patience_;
  double threshold_;
  double best_;
  int bad_epochs_ = 0;
  int decays_ = 0;
};

struct Batch {
  torch::Tensor clean;  ///< (B,3,crop,crop)
  torch::Tensor noisy;
  double sigma = 0.0;   ///< noise level of this step (awgn kinds), else 0
};

/// Owns model, optimizer and schedule state for one training run.
///
/// All randomness of step k (crop choice and position, synthetic noise,
/// quantization noise) is derived from (seed, k), so a run resumed from a
/// checkpoint replays the same trajectory.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<ImageBuffer> images);

  const TrainConfig& config() const { return config_; }
  net::JicdModelImpl& model() { return *model_; }
  net::JicdModel model_handle() const { return model_; }
  std::int64_t step_count() const { return step_; }
  int epoch() const { return epoch_; }
  int steps_per_epoch() const;
  double lr() const;
  void set_lr(double lr);
  PlateauScheduler& scheduler() { return scheduler_; }

  /// Crops and noise of step `k`.
  Batch make_batch(std::int64_t k) const;

  /// One optimizer step on the next batch.
  LossBreakdown step();

  /// Runs the remaining steps of the current epoch, then the schedule update.
  /// Returns the epoch's mean loss.
  double run_epoch(const std::function<void(std::int64_t, const LossBreakdown&)>& on_step = {});

  /// Writes model, optimizer, schedule and progress.
  void save_checkpoint(const std::filesystem::path& path) const;
  /// Restores state written by save_checkpoint with an identical config.
  void load_checkpoint(const std::filesystem::path& path);

 private:
  TrainConfig config_;
  std::vector<ImageBuffer> images_;
  net::JicdModel model_{nullptr};
  std::unique_ptr<torch::optim::Adam> optimizer_;
  PlateauScheduler scheduler_;
  std::int64_t step_ = 0;
  int epoch_ = 0;
  double epoch_loss_sum_ = 0.0;
  int epoch_steps_done_ = 0;
};

struct FitOptions {
  std::filesystem::path run_dir;  ///< checkpoints and logs; empty: none written
  bool resume = false;
  std::function<void(std::int64_t, const LossBreakdown&)> on_step;
};

struct FitResult {
  net::JicdModel model{nullptr};
  std::int64_t steps = 0;
  int epochs = 0;
  double final_lr = 0.0;
  std::vector<double> epoch_losses;
};

/// Trains on `images` (clean, at least `crop` pixels on each side) until
/// `epochs` or `max_steps` is reached. With a run dir, writes
/// logs/train.jsonl, checkpoints each epoch to artifacts/checkpoint.jckpt and
/// the final model to artifacts/model.jckpt. Throws std::invalid_argument on
/// an empty image set.
FitResult fit(std::vector<ImageBuffer> images, const TrainConfig& config,
              const FitOptions& options = {});

/// Model file: magic, version, JSON metadata (config, lambda, tensor index)
/// and raw little-endian float32 tensors.
struct ModelFile {
  static constexpr char kMagic[8] = {'J', 'I', 'C', 'D', 'C', 'K', 'P', 'T'};
  static constexpr std::uint32_t kVersion = 1;
};

/// Saves the parameters and `meta` (merged into the metadata object).
void save_model(const net::JicdModelImpl& model, const std::filesystem::path& path,
                const nlohmann::json& meta = nlohmann::json::object(),
                const std::string& extra_blob = {});

struct LoadedModel {
  net::JicdModel model{nullptr};
  nlohmann::json meta;
  std::string extra_blob;
};

/// Throws std::runtime_error naming the path when missing or unreadable, and
/// FormatError on a bad magic or version.
LoadedModel load_model(const std::filesystem::path& path);

struct GradientSample {
  std::string parameter;
  std::int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientSample> entries;
  int samples = 0;
  int passed = 0;
  double worst_relative_error = 0.0;
  double pass_fraction() const { return samples ? static_cast<double>(passed) / samples : 0.0; }
};

/// Analytic gradients of the loss vs central finite differences on a double
/// precision model with fixed inputs and quantization noise. Relative error
/// is |g - fd| / max(|g|, |fd|, abs_floor).
GradientCheckReport gradient_check(const net::ModelConfig& model_config, std::uint64_t seed,
                                   int samples = 100, double step = 1e-3,
                                   double tolerance = 1e-2, double abs_floor = 1e-6);

}  // namespace jicd::train
