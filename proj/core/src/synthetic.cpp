#include "jicd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "jicd/rng.hpp"

namespace jicd::data {

namespace {

using Color = std::array<double, 3>;

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

ImageBuffer synthetic_image(int height, int width, std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, {0x5947ULL, index}));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto color = [&] { return Color{u(rng), u(rng), u(rng)}; };

  std::vector<double> canvas(static_cast<std::size_t>(height) * width * 3);
  const Color c0 = color();
  const Color c1 = color();
  const double angle = 2.0 * std::numbers::pi * u(rng);
  const double gx = std::cos(angle) / width;
  const double gy = std::sin(angle) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double t = std::clamp(0.5 + gx * (x - width / 2.0) + gy * (y - height / 2.0), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        canvas[(static_cast<std::size_t>(y) * width + x) * 3 + c] = (1 - t) * c0[c] + t * c1[c];
      }
    }
  }

  const int shapes = 4 + static_cast<int>(u(rng) * 8);
  const double scale = std::min(height, width);
  for (int s = 0; s < shapes; ++s) {
    const int kind = static_cast<int>(u(rng) * 3);
    const Color col = color();
    const double cx = u(rng) * width;
    const double cy = u(rng) * height;
    const double rx = (0.05 + 0.3 * u(rng)) * scale;
    const double ry = (0.05 + 0.3 * u(rng)) * scale;
    const double rot = std::numbers::pi * u(rng);
    const double soft = 0.5 + 2.0 * u(rng);
    const double freq = 0.1 + 0.4 * u(rng);
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double lx = cr * dx + sr * dy;
        const double ly = -sr * dx + cr * dy;
        double dist;  // signed distance estimate in pixels, negative inside
        if (kind == 1) {
          dist = std::max(std::abs(lx) - rx, std::abs(ly) - ry);
        } else {
          dist = (std::hypot(lx / rx, ly / ry) - 1.0) * std::min(rx, ry);
        }
        double alpha = 1.0 - smoothstep(-soft, soft, dist);
        if (alpha <= 0.0) continue;
        double shade = 1.0;
        if (kind == 2) shade = 0.75 + 0.25 * std::sin(freq * lx);
        alpha *= 0.9;
        auto* px = &canvas[(static_cast<std::size_t>(y) * width + x) * 3];
        for (int c = 0; c < 3; ++c) px[c] = (1 - alpha) * px[c] + alpha * col[c] * shade;
      }
    }
  }

  ImageBuffer img(height, width);
  auto v = img.values();
  for (std::size_t k = 0; k < canvas.size(); ++k) {
    v[k] = static_cast<float>(std::clamp(canvas[k], 0.0, 1.0));
  }
  return img.quantized_8bit();
}

std::vector<ImageBuffer> synthetic_corpus(int count, int height, int width, std::uint64_t seed,
                                          std::uint64_t first) {
  std::vector<ImageBuffer> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(synthetic_image(height, width, seed, first + k));
  return out;
}

}  // namespace jicd::data
