#include "jicd/noise_lab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "jicd/rng.hpp"

namespace jicd::noise {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::awgn: return "awgn";
    case NoiseKind::practical: return "practical";
    case NoiseKind::variable_awgn: return "variable_awgn";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "awgn") return NoiseKind::awgn;
  if (name == "practical") return NoiseKind::practical;
  if (name == "variable_awgn" || name == "variable") return NoiseKind::variable_awgn;
  throw std::invalid_argument("unknown noise kind '" + name + "'");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (kind == NoiseKind::variable_awgn && sigma_set.empty()) {
    throw std::invalid_argument("variable_awgn needs a nonempty sigma_set");
  }
  for (double s : sigma_set) {
    if (!(s >= 0.0)) throw std::invalid_argument("sigma_set entries must be >= 0");
  }
  for (int c = 0; c < 3; ++c) {
    if (!(a[c] >= 0.0) || !(b[c] >= 0.0)) {
      throw std::invalid_argument("practical noise coefficients a, b must be >= 0");
    }
  }
}

namespace {

// Clip to [0, 255] in the 8-bit domain, round half away from zero, rescale.
float store_8bit(double value255) {
  return static_cast<float>(std::round(std::clamp(value255, 0.0, 255.0))) / 255.0f;
}

}  // namespace

ImageBuffer synth_awgn(const ImageBuffer& clean, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("synth_awgn: sigma must be >= 0");
  ImageBuffer out(clean.height(), clean.width());
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto src = clean.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    dst[k] = store_8bit(255.0 * static_cast<double>(src[k]) + sigma * gauss(rng));
  }
  return out;
}

ImageBuffer synth_practical(const ImageBuffer& clean, const std::array<double, 3>& a,
                            const std::array<double, 3>& b, std::uint64_t seed,
                            bool exact_poisson) {
  for (int c = 0; c < 3; ++c) {
    if (!(a[c] >= 0.0) || !(b[c] >= 0.0)) {
      throw std::invalid_argument("synth_practical: a and b must be >= 0");
    }
  }
  ImageBuffer out(clean.height(), clean.width());
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto src = clean.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) {
    const int c = static_cast<int>(k % 3);
    const double x = std::clamp(static_cast<double>(src[k]), 0.0, 1.0);
    double noisy;
    if (exact_poisson && a[c] > 0.0) {
      std::poisson_distribution<long long> counts(x / a[c]);
      noisy = a[c] * static_cast<double>(counts(rng)) + std::sqrt(b[c]) * gauss(rng);
    } else {
      noisy = x + std::sqrt(a[c] * x + b[c]) * gauss(rng);
    }
    dst[k] = store_8bit(255.0 * noisy);
  }
  return out;
}

ImageBuffer synth_practical(const ImageBuffer& clean, double a, double b, std::uint64_t seed) {
  return synth_practical(clean, {a, a, a}, {b, b, b}, seed);
}

double sigma_for_iteration(const NoiseSpec& spec, std::uint64_t iteration) {
  if (spec.sigma_set.empty()) throw std::invalid_argument("sigma_set is empty");
  Rng rng(derive_seed(spec.seed, {0x5167ULL, iteration}));
  std::uniform_int_distribution<std::size_t> pick(0, spec.sigma_set.size() - 1);
  return spec.sigma_set[pick(rng)];
}

ImageBuffer apply(const NoiseSpec& spec, const ImageBuffer& clean, std::uint64_t stream,
                  double sigma_override) {
  spec.validate();
  const std::uint64_t seed = derive_seed(spec.seed, {stream});
  switch (spec.kind) {
    case NoiseKind::awgn:
      return synth_awgn(clean, sigma_override >= 0.0 ? sigma_override : spec.sigma, seed);
    case NoiseKind::variable_awgn: {
      const double s = sigma_override >= 0.0 ? sigma_override : sigma_for_iteration(spec, stream);
      return synth_awgn(clean, s, seed);
    }
    case NoiseKind::practical:
      return synth_practical(clean, spec.a, spec.b, seed, spec.exact_poisson);
  }
  throw std::logic_error("unhandled noise kind");
}

SigmaEstimate estimate_sigma(const ImageBuffer& noisy, const ImageBuffer& clean) {
  if (!noisy.same_shape(clean)) {
    throw std::invalid_argument("estimate_sigma: image dimensions differ");
  }
  SigmaEstimate est;
  if (static_cast<long long>(noisy.height()) * noisy.width() < 2) {
    est.degenerate = true;
    return est;
  }
  auto n = noisy.values();
  auto c = clean.values();
  double mean = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) mean += 255.0 * (double(n[k]) - double(c[k]));
  mean /= static_cast<double>(n.size());
  double var = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    const double d = 255.0 * (double(n[k]) - double(c[k])) - mean;
    var += d * d;
  }
  est.sigma = std::sqrt(var / static_cast<double>(n.size()));
  return est;
}

}  // namespace jicd::noise
