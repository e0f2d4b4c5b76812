#pragma once

#include "jicd/image.hpp"

namespace jicd::eval {

struct Dims {
  int height = 0;
  int width = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Smallest multiple of `multiple` that is >= v.
int next_multiple(int v, int multiple = 64);

struct Padded {
  ImageBuffer image;
  Dims original;
};

/// Mirror-pads bottom and right to the next multiples of 64. Reflection
/// excludes the edge sample and repeats with period 2(n-1), so it works for
/// any pad amount; a 1-pixel-wide axis is replicated.
Padded pad_to_64(const ImageBuffer& image);

/// Top-left crop back to `original`.
ImageBuffer crop_back(const ImageBuffer& image, Dims original);

}  // namespace jicd::eval
