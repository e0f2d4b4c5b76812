#include "jicd/latent_models.hpp"

#include <algorithm>
#include <cmath>

#include "jicd/errors.hpp"

namespace jicd::net {

namespace {

constexpr double kLeakySlope = 0.01;

std::vector<double> to_doubles(const torch::Tensor& t) {
  auto d = t.detach().to(torch::kCPU, torch::kDouble).contiguous();
  return {d.data_ptr<double>(), d.data_ptr<double>() + d.numel()};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

IncrementalEntropyParams::IncrementalEntropyParams(JicdModelImpl& model, Layer layer,
                                                   const torch::Tensor& hyper_features)
    : channels_(model.layer_channels(layer)) {
  if (hyper_features.dim() != 4 || hyper_features.size(0) != 1 ||
      hyper_features.size(1) != model.config().hyper_feature_channels()) {
    throw ContractViolation("hyper features must be (1, 2C, N, M)");
  }
  feature_channels_ = static_cast<int>(hyper_features.size(1));
  rows_ = static_cast<int>(hyper_features.size(2));
  cols_ = static_cast<int>(hyper_features.size(3));
  features_ = to_doubles(hyper_features);
  if (channels_ == 0) return;

  auto& ctx = model.context_model(layer);
  kernel_ = ctx->kernel();
  const auto mask = to_doubles(ctx->mask());
  for (int kh = 0; kh < kernel_; ++kh) {
    for (int kw = 0; kw < kernel_; ++kw) {
      if (mask[static_cast<std::size_t>(kh * kernel_ + kw)] != 0.0) {
        taps_.push_back({kh - kernel_ / 2, kw - kernel_ / 2});
      }
    }
  }
  const auto full = to_doubles(ctx->masked_weight());  // (2L, L, k, k)
  const int outs = 2 * channels_;
  ctx_weight_.resize(static_cast<std::size_t>(outs) * channels_ * taps_.size());
  for (int o = 0; o < outs; ++o) {
    for (int c = 0; c < channels_; ++c) {
      for (std::size_t t = 0; t < taps_.size(); ++t) {
        const int kh = taps_[t].dy + kernel_ / 2;
        const int kw = taps_[t].dx + kernel_ / 2;
        ctx_weight_[(static_cast<std::size_t>(o) * channels_ + c) * taps_.size() + t] =
            full[((static_cast<std::size_t>(o) * channels_ + c) * kernel_ + kh) * kernel_ + kw];
      }
    }
  }
  ctx_bias_ = to_doubles(ctx->bias());

  auto& head = model.entropy_head(layer);
  widths_.push_back(static_cast<int>(head->layers.front()->weight.size(1)));
  for (auto& conv : head->layers) {
    w_.push_back(to_doubles(conv->weight));
    b_.push_back(to_doubles(conv->bias));
    widths_.push_back(static_cast<int>(conv->weight.size(0)));
  }
  if (widths_.front() != feature_channels_ + outs || widths_.back() != outs) {
    throw ContractViolation("entropy head widths do not match the layer");
  }
}

void IncrementalEntropyParams::at(int n, int m, std::span<const double> y_hat,
                                  std::span<double> mu, std::span<double> sigma) const {
  const std::size_t plane = static_cast<std::size_t>(rows_) * cols_;
  if (y_hat.size() != plane * channels_ || mu.size() != static_cast<std::size_t>(channels_) ||
      sigma.size() != mu.size()) {
    throw ContractViolation("IncrementalEntropyParams::at: buffer sizes do not match the layer");
  }
  const int outs = 2 * channels_;
  std::vector<double> in(static_cast<std::size_t>(feature_channels_ + outs));
  for (int f = 0; f < feature_channels_; ++f) {
    in[f] = features_[f * plane + static_cast<std::size_t>(n) * cols_ + m];
  }

  // Gather the causal neighbourhood once; out-of-bounds taps read zero padding.
  std::vector<double> neigh(static_cast<std::size_t>(channels_) * taps_.size(), 0.0);
  for (std::size_t t = 0; t < taps_.size(); ++t) {
    const int r = n + taps_[t].dy;
    const int q = m + taps_[t].dx;
    if (r < 0 || r >= rows_ || q < 0 || q >= cols_) continue;
    for (int c = 0; c < channels_; ++c) {
      neigh[static_cast<std::size_t>(c) * taps_.size() + t] =
          y_hat[c * plane + static_cast<std::size_t>(r) * cols_ + q];
    }
  }
  const std::size_t per_out = static_cast<std::size_t>(channels_) * taps_.size();
  for (int o = 0; o < outs; ++o) {
    double acc = ctx_bias_[o];
    const double* w = ctx_weight_.data() + static_cast<std::size_t>(o) * per_out;
    for (std::size_t k = 0; k < per_out; ++k) acc += w[k] * neigh[k];
    in[static_cast<std::size_t>(feature_channels_ + o)] = acc;
  }

  std::vector<double> cur = std::move(in);
  for (std::size_t l = 0; l < w_.size(); ++l) {
    const int nin = widths_[l];
    const int nout = widths_[l + 1];
    std::vector<double> next(static_cast<std::size_t>(nout));
    for (int o = 0; o < nout; ++o) {
      double acc = b_[l][o];
      const double* w = w_[l].data() + static_cast<std::size_t>(o) * nin;
      for (int k = 0; k < nin; ++k) acc += w[k] * cur[k];
      if (l + 1 < w_.size() && acc < 0.0) acc *= kLeakySlope;
      next[o] = acc;
    }
    cur = std::move(next);
  }
  for (int c = 0; c < channels_; ++c) {
    mu[c] = cur[c];
    sigma[c] = std::max(cur[static_cast<std::size_t>(channels_ + c)], entropy::kScaleMin);
  }
}

// ---------------------------------------------------------------------------

FactorizedCdf::FactorizedCdf(const FactorizedDensityImpl& density)
    : channels_(density.channels()) {
  dims_ = {1};
  for (const auto& mat : density.matrices()) dims_.push_back(static_cast<int>(mat.size(1)));
  const int stages = static_cast<int>(density.matrices().size());
  matrix_.resize(stages);
  bias_.resize(stages);
  factor_.resize(stages);
  for (int s = 0; s < stages; ++s) {
    auto mat = to_doubles(density.matrices()[s]);
    auto bias = to_doubles(density.biases()[s]);
    std::vector<double> fac;
    if (s < static_cast<int>(density.factors().size())) fac = to_doubles(density.factors()[s]);
    const std::size_t msize = static_cast<std::size_t>(dims_[s + 1]) * dims_[s];
    const std::size_t vsize = static_cast<std::size_t>(dims_[s + 1]);
    for (int c = 0; c < channels_; ++c) {
      std::vector<double> m(mat.begin() + c * msize, mat.begin() + (c + 1) * msize);
      for (double& v : m) v = softplus(v);
      matrix_[s].push_back(std::move(m));
      bias_[s].emplace_back(bias.begin() + c * vsize, bias.begin() + (c + 1) * vsize);
      if (!fac.empty()) {
        std::vector<double> f(fac.begin() + c * vsize, fac.begin() + (c + 1) * vsize);
        for (double& v : f) v = std::tanh(v);
        factor_[s].push_back(std::move(f));
      }
    }
  }
}

double FactorizedCdf::logits_cumulative(int channel, double x) const {
  std::vector<double> h{x};
  for (std::size_t s = 0; s < matrix_.size(); ++s) {
    const int nin = dims_[s];
    const int nout = dims_[s + 1];
    std::vector<double> next(static_cast<std::size_t>(nout));
    const auto& m = matrix_[s][channel];
    const auto& b = bias_[s][channel];
    for (int o = 0; o < nout; ++o) {
      double acc = 0.0;
      for (int k = 0; k < nin; ++k) acc += m[static_cast<std::size_t>(o) * nin + k] * h[k];
      acc += b[o];
      if (!factor_[s].empty()) acc += factor_[s][channel][o] * std::tanh(acc);
      next[o] = acc;
    }
    h = std::move(next);
  }
  return h[0];
}

double FactorizedCdf::cdf(int channel, double x) const {
  return sigmoid(logits_cumulative(channel, x));
}

double FactorizedCdf::likelihood(int channel, double v) const {
  const double lower = logits_cumulative(channel, v - 0.5);
  const double upper = logits_cumulative(channel, v + 0.5);
  const double sign = (lower + upper) > 0.0 ? -1.0 : 1.0;
  return std::abs(sigmoid(sign * upper) - sigmoid(sign * lower));
}

entropy::SymbolModel FactorizedCdf::symbol_model(int channel) const {
  const int limit = entropy::kMaxHalfSupport;
  // Smallest s whose bin upper edge carries more than the tail mass.
  int lo = -limit, hi = limit;
  {
    int a = -limit, b = limit;
    while (a < b) {
      const int mid = a + (b - a) / 2;
      if (sigmoid(logits_cumulative(channel, mid + 0.5)) > kTailMass) b = mid; else a = mid + 1;
    }
    lo = a;
  }
  {
    int a = -limit, b = limit;
    while (a < b) {
      const int mid = a + (b - a + 1) / 2;
      if (sigmoid(-logits_cumulative(channel, mid - 0.5)) > kTailMass) a = mid; else b = mid - 1;
    }
    hi = a;
  }
  if (lo > hi) std::swap(lo, hi);
  std::vector<double> probs;
  probs.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int s = lo; s <= hi; ++s) probs.push_back(likelihood(channel, s));
  const double escape = sigmoid(logits_cumulative(channel, lo - 0.5)) +
                        sigmoid(-logits_cumulative(channel, hi + 0.5));
  return entropy::SymbolModel(lo, probs, escape);
}

// ---------------------------------------------------------------------------

CausalityAudit audit_causality(JicdModelImpl& model, Layer layer, int rows, int cols,
                               std::uint64_t seed) {
  CausalityAudit audit;
  const int channels = model.layer_channels(layer);
  if (channels == 0) return audit;
  torch::NoGradGuard no_grad;
  const auto dtype = model.hyper_density()->matrices().front().scalar_type();
  auto gen = torch::make_generator<at::CPUGeneratorImpl>(seed);
  const auto opts = torch::TensorOptions().dtype(dtype);
  auto y = torch::randn({1, channels, rows, cols}, gen, opts) * 3.0;
  auto features = torch::randn({1, model.config().hyper_feature_channels(), rows, cols}, gen, opts);
  const auto reference = model.entropy_params(layer, y, features);
  const double tol = dtype == torch::kDouble ? 1e-12 : 1e-5;

  for (int n = 0; n < rows; ++n) {
    for (int m = 0; m < cols; ++m) {
      auto perturbed = y.clone();
      auto flat = perturbed.view({channels, rows * cols});
      const int from = n * cols + m;
      using torch::indexing::Slice;
      flat.index_put_({Slice(), Slice(from, torch::indexing::None)},
                      torch::randn({channels, rows * cols - from}, gen, opts) * 10.0);
      const auto probe = model.entropy_params(layer, perturbed, features);
      using torch::indexing::Slice;
      const auto idx = std::vector<torch::indexing::TensorIndex>{0, Slice(), n, m};
      const double dmu = (probe.mu.index(idx) - reference.mu.index(idx)).abs().max().item<double>();
      const double dsig =
          (probe.sigma.index(idx) - reference.sigma.index(idx)).abs().max().item<double>();
      const double change = std::max(dmu, dsig);
      audit.max_abs_change = std::max(audit.max_abs_change, change);
      if (change > tol) ++audit.violations;
      ++audit.positions_checked;
    }
  }
  return audit;
}

}  // namespace jicd::net
