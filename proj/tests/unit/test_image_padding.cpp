#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "jicd/image.hpp"
#include "jicd/padding.hpp"

using namespace jicd;
using namespace jicd::eval;

namespace {

ImageBuffer random_image(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  ImageBuffer img(h, w);
  for (auto& v : img.values()) v = static_cast<float>(d(rng)) / 255.0f;
  return img;
}

}  // namespace

TEST(Image, BytesRoundTrip) {
  const auto img = random_image(7, 11, 1);
  EXPECT_EQ(ImageBuffer::from_bytes(7, 11, img.to_bytes()), img);
}

TEST(Image, PngRoundTrip) {
  const auto img = random_image(33, 17, 2);
  const auto path = std::filesystem::temp_directory_path() / "jicd_test_roundtrip.png";
  write_png(path, img);
  EXPECT_EQ(read_png(path), img);
  std::filesystem::remove(path);
}

TEST(Image, MissingPngNamesPath) {
  try {
    (void)read_png("/nonexistent/x.png");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/x.png"), std::string::npos);
  }
}

TEST(Image, CropOutOfRangeThrows) {
  const auto img = random_image(10, 10, 3);
  EXPECT_EQ(crop(img, 2, 3, 4, 5).height(), 4);
  EXPECT_THROW(crop(img, 8, 0, 4, 4), std::out_of_range);
}

TEST(Padding, NextMultiple) {
  EXPECT_EQ(next_multiple(500), 512);
  EXPECT_EQ(next_multiple(512), 512);
  EXPECT_EQ(next_multiple(1), 64);
  EXPECT_EQ(next_multiple(321), 384);
  EXPECT_EQ(next_multiple(481), 512);
}

TEST(Padding, ExamplesShapes) {
  const auto p = pad_to_64(ImageBuffer(321, 481));
  EXPECT_EQ(p.image.height(), 384);
  EXPECT_EQ(p.image.width(), 512);
  EXPECT_EQ(p.original, (Dims{321, 481}));
  const auto aligned = random_image(64, 128, 4);
  EXPECT_EQ(pad_to_64(aligned).image, aligned);
}

TEST(Padding, ReflectsWithoutEdgeRepeat) {
  const auto img = random_image(3, 5, 5);
  const auto p = pad_to_64(img).image;
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(p.at(0, 5, c), img.at(0, 3, c));
    EXPECT_EQ(p.at(0, 6, c), img.at(0, 2, c));
    EXPECT_EQ(p.at(3, 0, c), img.at(1, 0, c));
    EXPECT_EQ(p.at(4, 0, c), img.at(0, 0, c));
    EXPECT_EQ(p.at(5, 0, c), img.at(1, 0, c));
  }
}

TEST(Padding, SinglePixelAxisReplicates) {
  const auto img = random_image(1, 1, 6);
  const auto p = pad_to_64(img).image;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) EXPECT_EQ(p.at(y, x, 1), img.at(0, 0, 1));
}

TEST(Padding, CropBackInvertsPadOverDimRange) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d(1, 4096);
  std::vector<std::pair<int, int>> dims{{1, 1}, {1, 4096}, {4096, 1}, {63, 65}, {64, 64}};
  for (int k = 0; k < 40; ++k) dims.emplace_back(d(rng) / (k % 4 + 1), d(rng) / (k % 3 + 1));
  for (auto [h, w] : dims) {
    h = std::max(h, 1), w = std::max(w, 1);
    const auto img = random_image(h, w, static_cast<std::uint64_t>(h * 5000 + w));
    const auto p = pad_to_64(img);
    EXPECT_EQ(p.image.height() % 64, 0);
    EXPECT_EQ(p.image.width() % 64, 0);
    EXPECT_EQ(crop_back(p.image, p.original), img) << h << "x" << w;
  }
}
