#include "jicd/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

namespace jicd {

ImageBuffer::ImageBuffer(int height, int width, float fill) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be >= 1, got " + std::to_string(height) +
                                "x" + std::to_string(width));
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * kChannels,
               fill);
}

ImageBuffer ImageBuffer::from_bytes(int height, int width, std::span<const std::uint8_t> rgb) {
  ImageBuffer img(height, width);
  if (rgb.size() != img.size()) {
    throw std::invalid_argument("byte buffer size does not match image dimensions");
  }
  std::transform(rgb.begin(), rgb.end(), img.data_.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  return img;
}

std::uint8_t to_8bit(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::round(clamped * 255.0f));
}

ImageBuffer crop(const ImageBuffer& image, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > image.height() || x0 + w > image.width()) {
    throw std::out_of_range("crop window outside the image");
  }
  ImageBuffer out(h, w);
  for (int y = 0; y < h; ++y) {
    const auto src = image.values().subspan(image.channels() * (static_cast<std::size_t>(y0 + y) *
                                                                image.width() + x0),
                                            static_cast<std::size_t>(w) * image.channels());
    std::copy(src.begin(), src.end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(y) * w * image.channels());
  }
  return out;
}

std::vector<std::uint8_t> ImageBuffer::to_bytes() const {
  std::vector<std::uint8_t> out(data_.size());
  std::transform(data_.begin(), data_.end(), out.begin(), to_8bit);
  return out;
}

ImageBuffer ImageBuffer::quantized_8bit() const {
  return from_bytes(height_, width_, to_bytes());
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports fatal errors through longjmp; the message is parked in the
// error pointer and rethrown as an exception after setjmp returns.
[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot open image '" + path.string() + "'");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw std::runtime_error("'" + path.string() + "' is not a PNG file");
  }

  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                           png_warning_handler);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  std::vector<std::uint8_t> bytes;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    throw std::runtime_error("libpng: " + error + " ('" + path.string() + "')");
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
    throw std::runtime_error("unsupported PNG layout in '" + path.string() + "'");
  }

  bytes.resize(static_cast<std::size_t>(width) * height * 3);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return ImageBuffer::from_bytes(height, width, bytes);
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot write image '" + path.string() + "'");

  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler,
                                            png_warning_handler);
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  const auto bytes = image.to_bytes();
  if (setjmp(png_jmpbuf(png))) {
    throw std::runtime_error("libpng: " + error + " ('" + path.string() + "')");
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data()) + static_cast<std::size_t>(y) * image.width() * 3);
  }
  png_write_end(png, nullptr);
}

}  // namespace jicd
