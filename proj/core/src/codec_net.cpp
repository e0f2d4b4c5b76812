#include "jicd/codec_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "jicd/entropy_models.hpp"
#include "jicd/errors.hpp"
#include "jicd/rng.hpp"

namespace jicd::net {

namespace F = torch::nn::functional;

namespace {

constexpr double kLeakySlope = 0.01;
constexpr int kContextKernel = 5;

torch::nn::Conv2d conv(int in, int out, int kernel, int stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(kernel / 2));
}

torch::nn::ConvTranspose2d deconv(int in, int out, int kernel = 5, int stride = 2) {
  return torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, out, kernel)
                                        .stride(stride)
                                        .padding(kernel / 2)
                                        .output_padding(stride - 1));
}

torch::nn::LeakyReLU leaky() {
  return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kLeakySlope));
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < n; ++k) {
    h ^= p[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

void fill_normal(torch::Tensor& t, double stddev, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, stddev);
  auto cpu = torch::empty(t.sizes(), torch::kDouble);
  auto* p = cpu.data_ptr<double>();
  for (std::int64_t k = 0; k < cpu.numel(); ++k) p[k] = gauss(rng);
  torch::NoGradGuard guard;
  t.copy_(cpu);
}

void fill_uniform(torch::Tensor& t, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(lo, hi);
  auto cpu = torch::empty(t.sizes(), torch::kDouble);
  auto* p = cpu.data_ptr<double>();
  for (std::int64_t k = 0; k < cpu.numel(); ++k) p[k] = uni(rng);
  torch::NoGradGuard guard;
  t.copy_(cpu);
}

class ResidualUnitImpl : public torch::nn::Module {
 public:
  explicit ResidualUnitImpl(int channels) {
    const int half = std::max(1, channels / 2);
    body_ = register_module("body", torch::nn::Sequential(conv(channels, half, 1), torch::nn::ReLU(),
                                                          conv(half, half, 3), torch::nn::ReLU(),
                                                          conv(half, channels, 1)));
  }
  torch::Tensor forward(const torch::Tensor& x) { return torch::relu(x + body_->forward(x)); }

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualUnit);

}  // namespace

std::string to_string(Layer layer) { return layer == Layer::base ? "base" : "enhancement"; }

// ---------------------------------------------------------------------------

GDNImpl::GDNImpl(int channels, bool inverse) : inverse_(inverse) {
  beta_ = register_parameter("beta", torch::ones({channels}));
  auto gamma = torch::full({channels, channels}, 0.01);
  gamma.diagonal().fill_(std::sqrt(0.1));
  gamma_ = register_parameter("gamma", gamma);
}

torch::Tensor GDNImpl::forward(const torch::Tensor& x) {
  const auto c = gamma_.size(0);
  auto beta = beta_ * beta_ + 1e-6;
  auto gamma = (gamma_ * gamma_).view({c, c, 1, 1});
  auto norm = F::conv2d(x * x, gamma, F::Conv2dFuncOptions().bias(beta));
  return inverse_ ? x * torch::sqrt(norm) : x * torch::rsqrt(norm);
}

MaskedConv2dImpl::MaskedConv2dImpl(int in_channels, int out_channels, int kernel)
    : kernel_(kernel) {
  weight_ = register_parameter("weight", torch::zeros({out_channels, in_channels, kernel, kernel}));
  bias_ = register_parameter("bias", torch::zeros({out_channels}));
  auto mask = torch::ones({1, 1, kernel, kernel});
  const int c = kernel / 2;
  mask.index_put_({0, 0, c, torch::indexing::Slice(c, torch::indexing::None)}, 0.0);
  mask.index_put_({0, 0, torch::indexing::Slice(c + 1, torch::indexing::None)}, 0.0);
  mask_ = register_buffer("mask", mask);
}

torch::Tensor MaskedConv2dImpl::forward(const torch::Tensor& x) {
  return F::conv2d(x, weight_ * mask_, F::Conv2dFuncOptions().bias(bias_).padding(kernel_ / 2));
}

AttentionBlockImpl::AttentionBlockImpl(int channels) {
  trunk_ = register_module("trunk", torch::nn::Sequential(ResidualUnit(channels),
                                                          ResidualUnit(channels),
                                                          ResidualUnit(channels)));
  mask_ = register_module("mask", torch::nn::Sequential(ResidualUnit(channels),
                                                        ResidualUnit(channels),
                                                        ResidualUnit(channels),
                                                        conv(channels, channels, 1)));
}

torch::Tensor AttentionBlockImpl::forward(const torch::Tensor& x) {
  return x + trunk_->forward(x) * torch::sigmoid(mask_->forward(x));
}

FactorizedDensityImpl::FactorizedDensityImpl(int channels) : channels_(channels) {
  const int dims[] = {1, kHidden, kHidden, kHidden, 1};
  const double scale = std::pow(10.0, 1.0 / kStages);
  for (int s = 0; s < kStages; ++s) {
    const double init = std::log(std::expm1(1.0 / scale / dims[s + 1]));
    matrices_.push_back(register_parameter("matrix" + std::to_string(s),
                                           torch::full({channels, dims[s + 1], dims[s]}, init)));
    biases_.push_back(
        register_parameter("bias" + std::to_string(s), torch::zeros({channels, dims[s + 1], 1})));
    if (s + 1 < kStages) {
      factors_.push_back(register_parameter("factor" + std::to_string(s),
                                            torch::zeros({channels, dims[s + 1], 1})));
    }
  }
}

torch::Tensor FactorizedDensityImpl::logits_cumulative(const torch::Tensor& x) const {
  auto logits = x;
  for (int s = 0; s < kStages; ++s) {
    logits = torch::matmul(F::softplus(matrices_[s]), logits) + biases_[s];
    if (s + 1 < kStages) logits = logits + torch::tanh(factors_[s]) * torch::tanh(logits);
  }
  return logits;
}

torch::Tensor FactorizedDensityImpl::likelihood(const torch::Tensor& z_hat) const {
  const auto sizes = z_hat.sizes().vec();
  auto v = z_hat.permute({1, 0, 2, 3}).reshape({channels_, 1, -1});
  auto lower = logits_cumulative(v - 0.5);
  auto upper = logits_cumulative(v + 0.5);
  // Evaluate on whichever side of the median keeps the sigmoid difference precise.
  auto sign = torch::where((lower + upper) > 0, -torch::ones_like(lower), torch::ones_like(lower))
                  .detach();
  auto lik = torch::abs(torch::sigmoid(sign * upper) - torch::sigmoid(sign * lower));
  return lik.reshape({channels_, sizes[0], sizes[2], sizes[3]}).permute({1, 0, 2, 3});
}

EntropyParametersImpl::EntropyParametersImpl(int hyper_channels, int layer_channels) {
  const int in = hyper_channels + 2 * layer_channels;
  const int h1 = std::max(1, in * 5 / 6);
  const int h2 = std::max(1, in * 4 / 6);
  const int widths[] = {in, h1, h2, 2 * layer_channels};
  for (int k = 0; k < 3; ++k) {
    layers.push_back(register_module("conv" + std::to_string(k), conv(widths[k], widths[k + 1], 1)));
  }
}

torch::Tensor EntropyParametersImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = layers[k]->forward(h);
    if (k + 1 < layers.size()) h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
  }
  return h;
}

// ---------------------------------------------------------------------------

LatentPartition split_latent(const torch::Tensor& y, int i) {
  const auto c = y.size(1);
  if (i < 1 || i > c) {
    throw std::invalid_argument("split index " + std::to_string(i) + " outside [1, " +
                                std::to_string(c) + "]");
  }
  using torch::indexing::Slice;
  return {y.index({Slice(), Slice(0, i)}), y.index({Slice(), Slice(i, c)})};
}

torch::Tensor merge_latent(const LatentPartition& p) {
  return torch::cat({p.base, p.enhancement}, 1);
}

namespace {

class LowerBoundFunction : public torch::autograd::Function<LowerBoundFunction> {
 public:
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& x,
                               double bound) {
    ctx->save_for_backward({x});
    ctx->saved_data["bound"] = bound;
    return x.clamp_min(bound);
  }

  static torch::autograd::tensor_list backward(torch::autograd::AutogradContext* ctx,
                                               torch::autograd::tensor_list grads) {
    const auto x = ctx->get_saved_variables()[0];
    const double bound = ctx->saved_data["bound"].toDouble();
    const auto& g = grads[0];
    auto pass = (x >= bound).logical_or(g < 0);
    return {g * pass.to(g.scalar_type()), torch::Tensor()};
  }
};

}  // namespace

torch::Tensor lower_bound(const torch::Tensor& x, double bound, BoundGradient mode) {
  if (mode == BoundGradient::exact) return x.clamp_min(bound);
  return LowerBoundFunction::apply(x, bound);
}

torch::Tensor gaussian_likelihood(const torch::Tensor& y_hat, const torch::Tensor& mu,
                                  const torch::Tensor& sigma) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  auto v = torch::abs(y_hat - mu);
  auto upper = 0.5 * torch::erfc(-((0.5 - v) / sigma) * inv_sqrt2);
  auto lower = 0.5 * torch::erfc(-((-0.5 - v) / sigma) * inv_sqrt2);
  return upper - lower;
}

// ---------------------------------------------------------------------------

JicdModelImpl::JicdModelImpl(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const int n = config_.width;
  const int c = config_.total_channels;
  const int i = config_.base_channels;
  const int hw = config_.hyper_width;

  torch::nn::Sequential analysis(conv(3, n, 5, 2), GDN(n, false), conv(n, n, 5, 2), GDN(n, false));
  if (config_.attention) analysis->push_back(AttentionBlock(n));
  analysis->push_back(conv(n, n, 5, 2));
  analysis->push_back(GDN(n, false));
  analysis->push_back(conv(n, c, 5, 2));
  if (config_.attention) analysis->push_back(AttentionBlock(c));
  analysis_ = register_module("analysis", analysis);

  auto synthesis = [&](int in) {
    torch::nn::Sequential s;
    if (config_.attention) s->push_back(AttentionBlock(in));
    s->push_back(deconv(in, n));
    s->push_back(GDN(n, true));
    s->push_back(deconv(n, n));
    s->push_back(GDN(n, true));
    if (config_.attention) s->push_back(AttentionBlock(n));
    s->push_back(deconv(n, n));
    s->push_back(GDN(n, true));
    s->push_back(deconv(n, 3));
    return s;
  };
  synthesis_base_ = register_module("synthesis_base", synthesis(i));
  synthesis_full_ = register_module("synthesis_full", synthesis(c));

  hyper_analysis_ = register_module(
      "hyper_analysis",
      torch::nn::Sequential(conv(c, n, 3), leaky(), conv(n, n, 5, 2), leaky(), conv(n, hw, 5, 2)));
  const int mid = std::max(1, n * 3 / 2);
  hyper_synthesis_ = register_module(
      "hyper_synthesis",
      torch::nn::Sequential(deconv(hw, n), leaky(), deconv(n, mid), leaky(),
                            conv(mid, config_.hyper_feature_channels(), 3)));

  const int e = config_.enhancement_channels();
  context_base_ = register_module("context_base", MaskedConv2d(i, 2 * i, kContextKernel));
  params_base_ = register_module("params_base",
                                 EntropyParameters(config_.hyper_feature_channels(), i));
  // A zero-channel enhancement layer keeps one dummy channel in its heads so
  // the module tree is the same for every split; it is never evaluated.
  const int e_heads = std::max(e, 1);
  context_enh_ = register_module("context_enh", MaskedConv2d(e_heads, 2 * e_heads, kContextKernel));
  params_enh_ = register_module("params_enh",
                                EntropyParameters(config_.hyper_feature_channels(), e_heads));
  density_ = register_module("hyper_density", FactorizedDensity(hw));

  initialize(seed);
}

void JicdModelImpl::initialize(std::uint64_t seed) {
  for (const auto& item : named_modules("", false)) {
    const std::string& name = item.key();
    const auto& module = item.value();
    const std::uint64_t s = derive_seed(seed, {fnv1a(name)});
    if (auto* m = module->as<torch::nn::Conv2d>()) {
      const auto& w = m->weight;
      const double fan_in = static_cast<double>(w.size(1) * w.size(2) * w.size(3));
      fill_normal(m->weight, std::sqrt(1.0 / fan_in), s);
      torch::NoGradGuard guard;
      m->bias.zero_();
    } else if (auto* t = module->as<torch::nn::ConvTranspose2d>()) {
      const auto& w = t->weight;
      const double stride = static_cast<double>(t->options.stride()->at(0));
      const double fan_in = static_cast<double>(w.size(0) * w.size(2) * w.size(3)) / (stride * stride);
      fill_normal(t->weight, std::sqrt(1.0 / fan_in), s);
      torch::NoGradGuard guard;
      t->bias.zero_();
    } else if (auto* mc = module->as<MaskedConv2d>()) {
      auto w = mc->named_parameters(false)["weight"];
      const double taps = mc->mask().sum().item<double>();
      fill_normal(w, std::sqrt(1.0 / (static_cast<double>(w.size(1)) * taps)), s);
    } else if (auto* fd = module->as<FactorizedDensity>()) {
      for (std::size_t k = 0; k < fd->biases().size(); ++k) {
        auto b = fd->biases()[k];
        fill_uniform(b, -0.5, 0.5, derive_seed(s, {k}));
      }
    }
  }
}

namespace {

void require_multiple(std::int64_t v, std::int64_t m, const char* what) {
  if (v % m != 0) {
    throw ContractViolation(std::string(what) + " " + std::to_string(v) +
                            " is not a multiple of " + std::to_string(m));
  }
}

}  // namespace

torch::Tensor JicdModelImpl::analysis(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw ContractViolation("analysis expects (B,3,H,W)");
  require_multiple(x.size(2), ModelConfig::kPadMultiple, "input height");
  require_multiple(x.size(3), ModelConfig::kPadMultiple, "input width");
  return analysis_->forward(x);
}

torch::Tensor JicdModelImpl::synthesize_base(const torch::Tensor& y_base) {
  if (y_base.dim() != 4 || y_base.size(1) != config_.base_channels) {
    throw ContractViolation("synthesize_base expects exactly " +
                            std::to_string(config_.base_channels) + " channels");
  }
  return synthesis_base_->forward(y_base);
}

torch::Tensor JicdModelImpl::synthesize_full(const torch::Tensor& y) {
  if (y.dim() != 4 || y.size(1) != config_.total_channels) {
    throw ContractViolation("synthesize_full expects exactly " +
                            std::to_string(config_.total_channels) + " channels");
  }
  return synthesis_full_->forward(y);
}

torch::Tensor JicdModelImpl::hyper_analysis(const torch::Tensor& y) {
  require_multiple(y.size(2), ModelConfig::kHyperStride, "latent height");
  require_multiple(y.size(3), ModelConfig::kHyperStride, "latent width");
  return hyper_analysis_->forward(y);
}

torch::Tensor JicdModelImpl::hyper_synthesis(const torch::Tensor& z_hat) {
  return hyper_synthesis_->forward(z_hat);
}

int JicdModelImpl::layer_channels(Layer layer) const {
  return layer == Layer::base ? config_.base_channels : config_.enhancement_channels();
}

MaskedConv2d& JicdModelImpl::context_model(Layer layer) {
  return layer == Layer::base ? context_base_ : context_enh_;
}

EntropyParameters& JicdModelImpl::entropy_head(Layer layer) {
  return layer == Layer::base ? params_base_ : params_enh_;
}

torch::Tensor JicdModelImpl::context(Layer layer, const torch::Tensor& y_hat_layer) {
  if (y_hat_layer.size(1) != layer_channels(layer)) {
    throw ContractViolation("context: " + to_string(layer) + " layer expects " +
                            std::to_string(layer_channels(layer)) + " channels");
  }
  return context_model(layer)->forward(y_hat_layer);
}

GaussianParams JicdModelImpl::entropy_params(Layer layer, const torch::Tensor& y_hat_layer,
                                             const torch::Tensor& hyper_features,
                                             BoundGradient bound) {
  auto ctx = context(layer, y_hat_layer);
  auto out = entropy_head(layer)->forward(torch::cat({hyper_features, ctx}, 1));
  auto chunks = out.chunk(2, 1);
  return {chunks[0], lower_bound(chunks[1], entropy::kScaleMin, bound)};
}

ForwardOutput JicdModelImpl::forward_train(const torch::Tensor& x_noisy, const TrainNoise& noise,
                                           BoundGradient bound) {
  ForwardOutput out;
  out.y = analysis(x_noisy);
  auto z = hyper_analysis(out.y);
  out.z_hat = z + noise.hyper;
  out.likelihood_hyper = lower_bound(density_->likelihood(out.z_hat), entropy::kProbFloor, bound);
  auto features = hyper_synthesis(out.z_hat);

  out.y_hat = out.y + noise.latent;
  auto parts = split_latent(out.y_hat, config_.base_channels);

  auto layer_likelihood = [&](Layer layer, const torch::Tensor& part) {
    auto gp = entropy_params(layer, part, features, bound);
    return lower_bound(gaussian_likelihood(part, gp.mu, gp.sigma), entropy::kProbFloor, bound);
  };
  out.likelihood_base = layer_likelihood(Layer::base, parts.base);
  out.likelihood_enhancement = config_.enhancement_channels() > 0
                                   ? layer_likelihood(Layer::enhancement, parts.enhancement)
                                   : parts.enhancement;  // empty

  out.x_denoised = synthesize_base(parts.base);
  out.x_reconstructed = synthesize_full(out.y_hat);
  return out;
}

TrainNoise JicdModelImpl::sample_noise(std::int64_t batch, std::int64_t height, std::int64_t width,
                                       torch::Generator& gen) const {
  const auto opts = torch::TensorOptions().dtype(torch::kFloat32);
  const std::int64_t n = height / ModelConfig::kLatentStride;
  const std::int64_t m = width / ModelConfig::kLatentStride;
  TrainNoise noise;
  noise.latent = torch::rand({batch, config_.total_channels, n, m}, gen, opts) - 0.5;
  noise.hyper = torch::rand({batch, config_.hyper_width, n / ModelConfig::kHyperStride,
                             m / ModelConfig::kHyperStride},
                            gen, opts) - 0.5;
  return noise;
}

std::vector<std::pair<std::string, torch::Tensor>> JicdModelImpl::sorted_parameters() const {
  std::vector<std::pair<std::string, torch::Tensor>> params;
  for (const auto& item : named_parameters(true)) params.emplace_back(item.key(), item.value());
  std::sort(params.begin(), params.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return params;
}

std::uint64_t model_id(const JicdModelImpl& model) {
  nlohmann::json cfg = model.config();
  std::uint64_t h = fnv1a(cfg.dump());
  for (const auto& [name, t] : model.sorted_parameters()) {
    h = fnv1a(name, h);
    auto f = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    h = fnv1a(f.data_ptr<float>(), static_cast<std::size_t>(f.numel()) * sizeof(float), h);
  }
  return h;
}

torch::Tensor to_tensor(const ImageBuffer& image) {
  auto values = image.values();
  auto hwc = torch::from_blob(const_cast<float*>(values.data()),
                              {image.height(), image.width(), 3}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous().clone();
}

ImageBuffer to_image(const torch::Tensor& t) {
  auto chw = t.dim() == 4 ? t.squeeze(0) : t;
  if (chw.dim() != 3 || chw.size(0) != 3) throw ContractViolation("to_image expects 3 channels");
  auto hwc = chw.detach().to(torch::kCPU, torch::kFloat32).clamp(0.0, 1.0).permute({1, 2, 0})
                 .contiguous();
  ImageBuffer img(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)));
  std::memcpy(img.values().data(), hwc.data_ptr<float>(), img.size() * sizeof(float));
  return img.quantized_8bit();
}

}  // namespace jicd::net
