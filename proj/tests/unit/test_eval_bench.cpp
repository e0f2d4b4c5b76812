#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "jicd/eval_bench.hpp"
#include "jicd/image.hpp"
#include "test_support.hpp"

using namespace jicd;
using namespace jicd::eval;

namespace fs = std::filesystem;

namespace {

RDCurve curve(const std::vector<std::pair<double, double>>& pts, Task task = Task::denoise) {
  RDCurve c;
  c.dataset = "d";
  c.task = task;
  for (const auto& [r, q] : pts) c.points.push_back({"d", task, "00", 0.0, r, q});
  return c;
}

const std::vector<std::pair<double, double>> kAnchor{{0.1, 28.0}, {0.2, 30.5}, {0.4, 33.0}, {0.8, 35.2}};

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Psnr, IdenticalIsCapped) {
  const ImageBuffer a(8, 8, 0.3f);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
}

TEST(Psnr, UnitMseIs48dB) {
  ImageBuffer a(4, 4, 100.0f / 255.0f), b = a;
  for (auto& v : b.values()) v += 1.0f / 255.0f;
  EXPECT_NEAR(psnr(a, b), 20.0 * std::log10(255.0), 1e-4);
  EXPECT_NEAR(psnr(a, b), 48.1308, 1e-4);
}

TEST(Psnr, FullScaleDifferenceIsZero) {
  EXPECT_NEAR(psnr(ImageBuffer(3, 3, 0.0f), ImageBuffer(3, 3, 1.0f)), 0.0, 1e-9);
}

TEST(Psnr, Symmetric) {
  ImageBuffer a(5, 5, 0.2f), b(5, 5, 0.25f);
  b.at(2, 2, 1) = 0.9f;
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(Psnr, DimensionMismatch) { EXPECT_THROW(psnr(ImageBuffer(2, 2), ImageBuffer(2, 3)), std::invalid_argument); }

TEST(Bpp, WorkedExample) {
  const auto r = bpp_accounting(32, 100, 1000, 500, 512, 512);
  EXPECT_NEAR(r.base_bpp, 8.0 * 1132 / (512.0 * 512), 1e-12);
  EXPECT_NEAR(r.base_bpp, 0.034546, 1e-6);
  EXPECT_NEAR(r.full_bpp, 0.049805, 1e-6);
}

TEST(Bpp, EmptyEnhancementGivesEqualRates) {
  const auto r = bpp_accounting(32, 10, 20, 0, 64, 64);
  EXPECT_EQ(r.base_bpp, r.full_bpp);
}

TEST(Bpp, UsesOriginalDims) {
  const auto r = bpp_accounting(0, 0, 1000, 0, 500, 500);
  EXPECT_DOUBLE_EQ(r.base_bpp, 8000.0 / 250000.0);
}

TEST(Bpp, ZeroAreaRejected) { EXPECT_THROW(bpp_accounting(1, 1, 1, 1, 0, 5), std::invalid_argument); }

TEST(Bpp, ContainerOverloadBillsOverheadToBase) {
  ScalableBitstream bs;
  bs.header.orig_height = 100;
  bs.header.orig_width = 50;
  bs.side.resize(3);
  bs.base.resize(40);
  bs.enhancement.resize(7);
  const auto r = bpp_accounting(bs);
  EXPECT_DOUBLE_EQ(r.base_bpp, 8.0 * (kContainerOverheadBytes + 43) / 5000.0);
  EXPECT_DOUBLE_EQ(r.full_bpp, 8.0 * bs.total_bytes() / 5000.0);
  EXPECT_LT(r.base_bpp, r.full_bpp);
}

TEST(BdRate, IdenticalCurvesAreZero) {
  EXPECT_NEAR(bd_rate(curve(kAnchor), curve(kAnchor)).percent, 0.0, 1e-9);
}

TEST(BdRate, DoubledRateIsPlus100) {
  auto doubled = kAnchor;
  for (auto& [r, q] : doubled) r *= 2;
  EXPECT_NEAR(bd_rate(curve(kAnchor), curve(doubled)).percent, 100.0, 0.1);
}

TEST(BdRate, LessRateIsNegative) {
  auto cheaper = kAnchor;
  for (auto& [r, q] : cheaper) r *= 0.7;
  EXPECT_NEAR(bd_rate(curve(kAnchor), curve(cheaper)).percent, -30.0, 0.1);
}

TEST(BdRate, ApproximatelyAntisymmetric) {
  const std::vector<std::pair<double, double>> t{{0.09, 28.6}, {0.17, 31.4}, {0.33, 33.9}, {0.7, 36.0}};
  const double ab = bd_rate(curve(kAnchor), curve(t)).percent;
  const double ba = bd_rate(curve(t), curve(kAnchor)).percent;
  EXPECT_NEAR(ab, -ba / (1 + ba / 100), 0.5);
}

TEST(BdRate, ReportsOverlapAndFit) {
  const std::vector<std::pair<double, double>> t{{0.1, 29.0}, {0.2, 31.5}, {0.4, 34.0}, {0.8, 37.0}};
  const auto r = bd_rate(curve(kAnchor), curve(t));
  EXPECT_DOUBLE_EQ(r.psnr_low, 29.0);
  EXPECT_DOUBLE_EQ(r.psnr_high, 35.2);
  EXPECT_LT(r.anchor_fit_rms, 1e-9);  // four points, cubic: exact fit
}

TEST(BdRate, TooFewPointsOrNoOverlap) {
  const std::vector<std::pair<double, double>> three(kAnchor.begin(), kAnchor.end() - 1);
  EXPECT_THROW(bd_rate(curve(kAnchor), curve(three)), std::invalid_argument);
  const std::vector<std::pair<double, double>> high{{0.1, 40}, {0.2, 41}, {0.4, 42}, {0.8, 43}};
  EXPECT_THROW(bd_rate(curve(kAnchor), curve(high)), std::invalid_argument);
}

TEST(BdRate, TableIsAligned) {
  const auto text = format_bd_table({{"a", BDRateReport{-12.5, 30, 35, 0, 0}},
                                     {"longer-name", BDRateReport{100.0, 30, 35, 0, 0}}});
  EXPECT_NE(text.find("-12.50%"), std::string::npos) << text;
  EXPECT_NE(text.find("+100.00%"), std::string::npos) << text;
}

TEST(Curves, ValidateRejectsBadCurves) {
  EXPECT_NO_THROW(curve(kAnchor).validate());
  EXPECT_THROW(curve({{0.2, 30}, {0.1, 31}}).validate(), std::invalid_argument);
  EXPECT_THROW(curve({{0.0, 30}}).validate(), std::invalid_argument);
  EXPECT_THROW(curve({{0.1, std::nan("")}}).validate(), std::invalid_argument);
}

TEST(Curves, SerializeRoundTrip) {
  std::vector<RDPoint> pts{{"kodak", Task::denoise, "be8018f6933b1e3c", 0.013, 0.1234567890123, 31.5},
                           {"kodak", Task::noisy_recon, "be8018f6933b1e3c", 0.013, 0.5, 27.25},
                           {"cbsd", Task::denoise, "01", 0.0035, 0.05, 29.0}};
  for (const auto& p : pts) EXPECT_EQ(parse_json_line(to_json_line(p)), p);
  const auto dir = temp_dir("jicd_test_curves");
  write_points(dir / "c.jsonl", pts);
  EXPECT_EQ(read_points(dir / "c.jsonl"), pts);
  const auto curves = group_curves(pts);
  ASSERT_EQ(curves.size(), 3u);
  EXPECT_EQ(curves[0].dataset, "kodak");
  EXPECT_EQ(curves[0].task, Task::denoise);
}

TEST(Curves, GroupSortsByRate) {
  std::vector<RDPoint> pts{{"d", Task::denoise, "", 0, 0.4, 33}, {"d", Task::denoise, "", 0, 0.1, 28}};
  const auto c = group_curves(pts);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].rates(), (std::vector<double>{0.1, 0.4}));
  EXPECT_EQ(c[0].psnrs(), (std::vector<double>{28, 33}));
}

TEST(Task, Names) {
  EXPECT_EQ(parse_task(to_string(Task::denoise)), Task::denoise);
  EXPECT_EQ(parse_task(to_string(Task::noisy_recon)), Task::noisy_recon);
  EXPECT_THROW(parse_task("x"), std::invalid_argument);
}

TEST(Manifest, RoundTripAndRelativePaths) {
  const auto dir = temp_dir("jicd_test_manifest");
  write_png(dir / "a.png", ImageBuffer(5, 6, 0.5f));
  write_png(dir / "a_noisy.png", ImageBuffer(5, 6, 0.25f));
  DatasetManifest m{"set", {{"a", "a.png", fs::path("a_noisy.png")}}};
  write_manifest(dir / "m.json", m);
  const auto back = read_manifest(dir / "m.json");
  EXPECT_EQ(back.label, "set");
  ASSERT_EQ(back.entries.size(), 1u);
  EXPECT_EQ(back.entries[0].clean, dir / "a.png");
  EXPECT_EQ(*back.entries[0].noisy, dir / "a_noisy.png");
  EXPECT_NO_THROW(back.validate());
  EXPECT_EQ(load_clean_images(back)[0].width(), 6);
}

TEST(Manifest, MissingFileNamed) {
  DatasetManifest m{"set", {{"ghost", "/nonexistent/ghost.png", std::nullopt}}};
  try {
    m.validate();
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Evaluate, IdenticalModelsGiveCoincidentPoints) {
  net::JicdModel model(jicd::testing::micro_config(), 4);
  model->eval();
  std::vector<std::pair<std::string, ImageBuffer>> images;
  for (int k = 0; k < 2; ++k) {
    ImageBuffer img(40 + k * 9, 50, 0.0f);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>((x + 2 * y + 40 * c) % 256) / 255.0f;
    images.emplace_back("img" + std::to_string(k), img);
  }
  noise::NoiseSpec spec;
  spec.sigma = 25;
  const auto r = evaluate({{model, 0.01}, {model, 0.01}}, images, "tiny", spec);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].denoise.bpp, r[1].denoise.bpp);
  EXPECT_EQ(r[0].denoise.psnr, r[1].denoise.psnr);
  EXPECT_EQ(r[0].noisy.bpp, r[1].noisy.bpp);
  ASSERT_EQ(r[0].images.size(), 2u);
  for (const auto& ir : r[0].images) EXPECT_LE(ir.base_bpp, ir.full_bpp);
  double mean = 0;
  for (const auto& ir : r[0].images) mean += ir.psnr_denoised_vs_clean / 2;
  EXPECT_NEAR(r[0].denoise.psnr, mean, 1e-12);
}

TEST(Plot, WritesSvg) {
  const auto dir = temp_dir("jicd_test_plot");
  write_plot_svg(dir / "rd.svg", {curve(kAnchor), curve(kAnchor, Task::noisy_recon)});
  std::ifstream is(dir / "rd.svg");
  std::string first;
  std::getline(is, first);
  EXPECT_NE(first.find("<svg"), std::string::npos);
}
