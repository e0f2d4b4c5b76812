#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "jicd/image.hpp"

namespace jicd::noise {

enum class NoiseKind { awgn, practical, variable_awgn };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

/// Noise family and its parameters.
///
/// `sigma` and `sigma_set` are standard deviations in 8-bit units. The
/// practical model is Poissonian-Gaussian with per-channel variance
/// a[c] * x + b[c] in normalized [0,1] units. The defaults for a and b are
/// placeholders; no published fit is available to this project.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::awgn;
  double sigma = 50.0;
  std::vector<double> sigma_set{15.0, 25.0, 50.0};
  std::array<double, 3> a{0.01, 0.01, 0.01};
  std::array<double, 3> b{0.0001, 0.0001, 0.0001};
  bool exact_poisson = false;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// round(clip(255 * clean + n, 0, 255)) / 255 with n ~ N(0, sigma^2) i.i.d.
ImageBuffer synth_awgn(const ImageBuffer& clean, double sigma, std::uint64_t seed);

/// Clipped, 8-bit quantized x + eta with eta ~ N(0, a*x + b) per channel.
/// With `exact_poisson`, the signal-dependent part is drawn as a * Poisson(x / a)
/// instead of its Gaussian approximation.
ImageBuffer synth_practical(const ImageBuffer& clean, const std::array<double, 3>& a,
                            const std::array<double, 3>& b, std::uint64_t seed,
                            bool exact_poisson = false);

/// Scalar-coefficient convenience overload (same a, b on every channel).
ImageBuffer synth_practical(const ImageBuffer& clean, double a, double b, std::uint64_t seed);

/// Standard deviation drawn for a variable-sigma training iteration.
/// Uniform over spec.sigma_set, fixed for the whole iteration.
double sigma_for_iteration(const NoiseSpec& spec, std::uint64_t iteration);

/// Applies `spec` to one image. `stream` separates images that share a seed
/// (e.g. the image index, or (step, crop) during training); `sigma_override`
/// replaces spec.sigma for awgn and variable_awgn when >= 0.
ImageBuffer apply(const NoiseSpec& spec, const ImageBuffer& clean, std::uint64_t stream,
                  double sigma_override = -1.0);

struct SigmaEstimate {
  double sigma = 0.0;      ///< std of 255 * (noisy - clean)
  bool degenerate = false; ///< fewer than two samples per channel
};

/// Population standard deviation of 255 * (noisy - clean) over all samples.
SigmaEstimate estimate_sigma(const ImageBuffer& noisy, const ImageBuffer& clean);

}  // namespace jicd::noise
