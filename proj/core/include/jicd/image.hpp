#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace jicd {

/// Interleaved RGB image with samples in [0,1].
///
/// Values are stored as float in HWC order. Anything produced by the noise
/// synthesizers or the decoders is an exact multiple of 1/255, so the 8-bit
/// round trip through to_bytes()/from_bytes() is lossless for those images.
class ImageBuffer {
 public:
  static constexpr int kChannels = 3;

  ImageBuffer() = default;
  ImageBuffer(int height, int width, float fill = 0.0f);

  static ImageBuffer from_bytes(int height, int width, std::span<const std::uint8_t> rgb);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return kChannels; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  /// Rounds each sample to the nearest of k/255 (half away from zero) after clamping.
  std::vector<std::uint8_t> to_bytes() const;

  /// Copy with every sample snapped to the 8-bit grid.
  ImageBuffer quantized_8bit() const;

  bool same_shape(const ImageBuffer& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

std::uint8_t to_8bit(float v);

/// Copy of the h x w window at (y0, x0). Throws std::out_of_range when the
/// window leaves the image.
ImageBuffer crop(const ImageBuffer& image, int y0, int x0, int h, int w);

// PNG I/O. Inputs may be gray, gray+alpha, RGB or RGBA with 8 or 16 bit
// depth; they are converted to 8-bit RGB. Output is always 8-bit RGB.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace jicd
