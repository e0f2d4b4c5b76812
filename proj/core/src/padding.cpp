#include "jicd/padding.hpp"

#include <stdexcept>

namespace jicd::eval {

int next_multiple(int v, int multiple) {
  if (v < 1) throw std::invalid_argument("dimension must be >= 1");
  return (v + multiple - 1) / multiple * multiple;
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int r = i % period;
  return r < n ? r : period - r;
}

}  // namespace

Padded pad_to_64(const ImageBuffer& image) {
  const Dims original{image.height(), image.width()};
  const int ph = next_multiple(original.height);
  const int pw = next_multiple(original.width);
  ImageBuffer out(ph, pw);
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect(y, original.height);
    for (int x = 0; x < pw; ++x) {
      const int sx = reflect(x, original.width);
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return {std::move(out), original};
}

ImageBuffer crop_back(const ImageBuffer& image, Dims original) {
  if (original.height < 1 || original.width < 1 || original.height > image.height() ||
      original.width > image.width()) {
    throw std::invalid_argument("crop_back: target dims exceed the image");
  }
  ImageBuffer out(original.height, original.width);
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, x, c);
    }
  }
  return out;
}

}  // namespace jicd::eval
