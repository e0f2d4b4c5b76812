#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "jicd/codec_net.hpp"
#include "jicd/entropy_models.hpp"

namespace jicd::net {

/// Raster-order evaluation of one layer's entropy parameters.
///
/// Weights of the layer's masked context model and entropy-parameter head are
/// copied out of the model once, in double precision; `at()` then produces
/// (mu, sigma) for one spatial position from already-decoded values only.
/// Encoder and decoder both go through this class, so they see bit-identical
/// parameters.
class IncrementalEntropyParams {
 public:
  /// `hyper_features` is (1, 2C, N, M).
  IncrementalEntropyParams(JicdModelImpl& model, Layer layer, const torch::Tensor& hyper_features);

  int channels() const { return channels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// `y_hat` is (channels, rows, cols) row-major; only positions strictly
  /// before (n, m) in raster order are read. Writes `channels` values each.
  void at(int n, int m, std::span<const double> y_hat, std::span<double> mu,
          std::span<double> sigma) const;

 private:
  struct Tap {
    int dy, dx;
  };

  int channels_;
  int rows_;
  int cols_;
  int feature_channels_;
  int kernel_;
  std::vector<Tap> taps_;                // causal taps only
  std::vector<double> ctx_weight_;       // (2L, L, taps)
  std::vector<double> ctx_bias_;         // (2L)
  std::vector<std::vector<double>> w_;   // per head layer, (out, in)
  std::vector<std::vector<double>> b_;
  std::vector<int> widths_;
  std::vector<double> features_;         // (2C, rows, cols)
};

/// Double-precision evaluation of the learned hyper-latent CDF, mirroring
/// FactorizedDensityImpl.
class FactorizedCdf {
 public:
  /// Tail mass left to the escape bin on each side when sizing supports.
  static constexpr double kTailMass = 1e-9;

  explicit FactorizedCdf(const FactorizedDensityImpl& density);

  int channels() const { return channels_; }
  double logits_cumulative(int channel, double x) const;
  double cdf(int channel, double x) const;
  /// Probability of the unit bin centred on v (not floored).
  double likelihood(int channel, double v) const;
  /// Coding model for integer symbols of one channel.
  entropy::SymbolModel symbol_model(int channel) const;

 private:
  int channels_;
  // Per stage, per channel: softplus(matrix), bias, tanh(factor).
  std::vector<std::vector<std::vector<double>>> matrix_;
  std::vector<std::vector<std::vector<double>>> bias_;
  std::vector<std::vector<std::vector<double>>> factor_;
  std::vector<int> dims_;
};

struct CausalityAudit {
  std::size_t positions_checked = 0;
  std::size_t violations = 0;
  double max_abs_change = 0.0;
};

/// Perturbs every position at or after (n, m) in raster order and checks that
/// the batch entropy parameters at (n, m) do not move. Runs over all
/// positions of a random (1, L, rows, cols) latent.
CausalityAudit audit_causality(JicdModelImpl& model, Layer layer, int rows, int cols,
                               std::uint64_t seed);

}  // namespace jicd::net
