#pragma once

#include <cstdint>
#include <vector>

#include "jicd/image.hpp"

namespace jicd::data {

/// Procedural natural-looking test image: a smooth colour gradient with
/// overlapping soft-edged ellipses, rectangles and striped texture patches.
/// Deterministic in (seed, index).
ImageBuffer synthetic_image(int height, int width, std::uint64_t seed, std::uint64_t index);

/// `count` images generated with consecutive indices starting at `first`.
std::vector<ImageBuffer> synthetic_corpus(int count, int height, int width, std::uint64_t seed,
                                          std::uint64_t first = 0);

}  // namespace jicd::data
