#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "jicd/image.hpp"
#include "jicd/model_config.hpp"

namespace jicd::net {

/// Generalized divisive normalization (or its inverse) with squared
/// reparameterization of beta and gamma.
class GDNImpl : public torch::nn::Module {
 public:
  GDNImpl(int channels, bool inverse);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  bool inverse_;
  torch::Tensor beta_;   // (C)
  torch::Tensor gamma_;  // (C, C)
};
TORCH_MODULE(GDN);

/// Spatially causal convolution: taps at and after the centre (raster order)
/// are masked out, so output (n, m) sees only inputs at earlier positions.
class MaskedConv2dImpl : public torch::nn::Module {
 public:
  MaskedConv2dImpl(int in_channels, int out_channels, int kernel);
  torch::Tensor forward(const torch::Tensor& x);

  int kernel() const { return kernel_; }
  torch::Tensor masked_weight() const { return weight_ * mask_; }
  const torch::Tensor& bias() const { return bias_; }
  const torch::Tensor& mask() const { return mask_; }

 private:
  int kernel_;
  torch::Tensor weight_;
  torch::Tensor bias_;
  torch::Tensor mask_;
};
TORCH_MODULE(MaskedConv2d);

/// Simplified attention: x + trunk(x) * sigmoid(mask(x)).
class AttentionBlockImpl : public torch::nn::Module {
 public:
  explicit AttentionBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Sequential mask_{nullptr};
};
TORCH_MODULE(AttentionBlock);

/// Per-channel learned CDF for the hyper-latent (monotone MLP through a
/// sigmoid). Channels are independent; the density is fully factorized.
class FactorizedDensityImpl : public torch::nn::Module {
 public:
  static constexpr int kHidden = 3;
  static constexpr int kStages = 4;  // 1 -> 3 -> 3 -> 3 -> 1

  explicit FactorizedDensityImpl(int channels);

  /// Logit of the CDF; x is (C, 1, K), result (C, 1, K).
  torch::Tensor logits_cumulative(const torch::Tensor& x) const;
  /// Bin probabilities of z_hat (B, C, H, W), same shape, not floored.
  torch::Tensor likelihood(const torch::Tensor& z_hat) const;

  int channels() const { return channels_; }
  const std::vector<torch::Tensor>& matrices() const { return matrices_; }
  const std::vector<torch::Tensor>& biases() const { return biases_; }
  const std::vector<torch::Tensor>& factors() const { return factors_; }

 private:
  int channels_;
  std::vector<torch::Tensor> matrices_;
  std::vector<torch::Tensor> biases_;
  std::vector<torch::Tensor> factors_;
};
TORCH_MODULE(FactorizedDensity);

/// 1x1-convolution head mapping [hyper features, context] to (mu, sigma_raw).
class EntropyParametersImpl : public torch::nn::Module {
 public:
  EntropyParametersImpl(int hyper_channels, int layer_channels);
  torch::Tensor forward(const torch::Tensor& x);

  std::vector<torch::nn::Conv2d> layers;
};
TORCH_MODULE(EntropyParameters);

enum class Layer { base, enhancement };

std::string to_string(Layer layer);

/// Disjoint channel split of a latent: base = [0, i), enhancement = [i, C).
struct LatentPartition {
  torch::Tensor base;
  torch::Tensor enhancement;
};

/// Channel dimension is 1 (NCHW). Throws std::invalid_argument when i is
/// outside [1, C].
LatentPartition split_latent(const torch::Tensor& y, int i);
torch::Tensor merge_latent(const LatentPartition& p);

struct GaussianParams {
  torch::Tensor mu;
  torch::Tensor sigma;  ///< >= kScaleMin
};

/// Uniform quantization-noise draws for one training forward pass.
struct TrainNoise {
  torch::Tensor latent;  ///< shape of y
  torch::Tensor hyper;   ///< shape of z
};

struct ForwardOutput {
  torch::Tensor y;
  torch::Tensor y_hat;
  torch::Tensor z_hat;
  torch::Tensor x_denoised;      ///< base synthesis, unclamped
  torch::Tensor x_reconstructed; ///< full synthesis, unclamped
  torch::Tensor likelihood_base;
  torch::Tensor likelihood_enhancement;
  torch::Tensor likelihood_hyper;
};

/// How the lower bounds on sigma and on likelihoods pass gradients.
/// `straight_through` lets gradients through when they push the value back
/// above the bound; `exact` is the true derivative of the clamp.
enum class BoundGradient { straight_through, exact };

/// Lower bound with a selectable gradient rule.
torch::Tensor lower_bound(const torch::Tensor& x, double bound, BoundGradient mode);

/// Discretized Gaussian bin probabilities (not floored).
torch::Tensor gaussian_likelihood(const torch::Tensor& y_hat, const torch::Tensor& mu,
                                  const torch::Tensor& sigma);

/// The complete learned codec.
///
/// One analysis transform feeds a channel-partitioned latent. The base layer
/// (first i channels) has its own synthesis producing the denoised image; the
/// full latent drives a second synthesis reconstructing the noisy input. Each
/// layer has its own causal context model and entropy-parameter head, both
/// conditioned on the shared hyper features; neither reads the other layer.
class JicdModelImpl : public torch::nn::Module {
 public:
  JicdModelImpl(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// (B,3,H,W) -> (B,C,H/16,W/16). H and W must be multiples of 64.
  torch::Tensor analysis(const torch::Tensor& x);
  /// Consumes exactly the i base channels.
  torch::Tensor synthesize_base(const torch::Tensor& y_base);
  /// Consumes all C channels.
  torch::Tensor synthesize_full(const torch::Tensor& y);
  /// (B,C,N,M) -> (B,hyper_width,N/4,M/4). N and M must be multiples of 4.
  torch::Tensor hyper_analysis(const torch::Tensor& y);
  /// Quantized hyper-latent to (B,2C,N,M) features aligned with y.
  torch::Tensor hyper_synthesis(const torch::Tensor& z_hat);

  /// Causal context features of one layer.
  torch::Tensor context(Layer layer, const torch::Tensor& y_hat_layer);
  /// Entropy parameters of one layer for all positions at once.
  GaussianParams entropy_params(Layer layer, const torch::Tensor& y_hat_layer,
                                const torch::Tensor& hyper_features,
                                BoundGradient bound = BoundGradient::straight_through);

  /// Training-time forward pass with additive uniform quantization noise.
  ForwardOutput forward_train(const torch::Tensor& x_noisy, const TrainNoise& noise,
                              BoundGradient bound = BoundGradient::straight_through);

  /// Draws U(-0.5, 0.5) noise for a batch of the given spatial size.
  TrainNoise sample_noise(std::int64_t batch, std::int64_t height, std::int64_t width,
                          torch::Generator& gen) const;

  int layer_channels(Layer layer) const;
  MaskedConv2d& context_model(Layer layer);
  EntropyParameters& entropy_head(Layer layer);
  FactorizedDensity& hyper_density() { return density_; }

  /// Parameters in a stable, name-sorted order.
  std::vector<std::pair<std::string, torch::Tensor>> sorted_parameters() const;

 private:
  void initialize(std::uint64_t seed);

  ModelConfig config_;
  torch::nn::Sequential analysis_{nullptr};
  torch::nn::Sequential synthesis_base_{nullptr};
  torch::nn::Sequential synthesis_full_{nullptr};
  torch::nn::Sequential hyper_analysis_{nullptr};
  torch::nn::Sequential hyper_synthesis_{nullptr};
  MaskedConv2d context_base_{nullptr};
  MaskedConv2d context_enh_{nullptr};
  EntropyParameters params_base_{nullptr};
  EntropyParameters params_enh_{nullptr};
  FactorizedDensity density_{nullptr};
};
TORCH_MODULE(JicdModel);

/// 64-bit FNV-1a digest over the config and the float32 weights in name order.
std::uint64_t model_id(const JicdModelImpl& model);

/// (1,3,H,W) float tensor from an image.
torch::Tensor to_tensor(const ImageBuffer& image);
/// Clamps to [0,1] and snaps to the 8-bit grid. Expects (1,3,H,W) or (3,H,W).
ImageBuffer to_image(const torch::Tensor& t);

}  // namespace jicd::net
