#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jicd/bitstream.hpp"
#include "jicd/codec_net.hpp"
#include "jicd/image.hpp"
#include "jicd/noise_lab.hpp"

namespace jicd::eval {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(255^2 / MSE) on the 8-bit scale, capped at 100 dB.
/// Throws std::invalid_argument on a dimension mismatch.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

struct BppAccounting {
  double base_bpp = 0.0;
  double full_bpp = 0.0;
};

/// Header and side bytes are billed to the base layer; the enhancement bytes
/// only to the full reconstruction. Divides by the original pixel count.
BppAccounting bpp_accounting(std::size_t header_bytes, std::size_t side_bytes,
                             std::size_t base_bytes, std::size_t enhancement_bytes,
                             std::uint32_t height, std::uint32_t width);
/// Same, with the container's fixed overhead as the header bytes.
BppAccounting bpp_accounting(const ScalableBitstream& bs);

enum class Task { denoise, noisy_recon };
std::string to_string(Task task);
Task parse_task(const std::string& name);

struct RDPoint {
  std::string dataset;
  Task task = Task::denoise;
  std::string model_id;  ///< hex
  double lambda = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
  friend bool operator==(const RDPoint&, const RDPoint&) = default;
};

/// Points of one (dataset, task), sorted by bpp.
struct RDCurve {
  std::string dataset;
  Task task = Task::denoise;
  std::vector<RDPoint> points;

  std::vector<double> rates() const;
  std::vector<double> psnrs() const;
  /// Throws std::invalid_argument unless bpp > 0, strictly increasing and
  /// PSNR finite.
  void validate() const;
};

/// Groups points by (dataset, task) in first-seen order and sorts each by bpp.
std::vector<RDCurve> group_curves(const std::vector<RDPoint>& points);

/// One JSON object per line: {dataset, task, model_id, lambda, bpp, psnr}.
void write_points(const std::filesystem::path& path, const std::vector<RDPoint>& points);
std::vector<RDPoint> read_points(const std::filesystem::path& path);
std::string to_json_line(const RDPoint& p);
RDPoint parse_json_line(const std::string& line);

struct BDRateReport {
  double percent = 0.0;   ///< average rate change of test vs anchor
  double psnr_low = 0.0;  ///< overlap interval
  double psnr_high = 0.0;
  double anchor_fit_rms = 0.0;  ///< residual of the log10-rate fit
  double test_fit_rms = 0.0;
};

/// Bjontegaard delta rate: cubic least-squares fit of log10(rate) against
/// PSNR per curve, integrated over the PSNR overlap. Negative means the test
/// curve needs less rate. Throws std::invalid_argument with fewer than 4
/// points on either curve or an empty overlap.
BDRateReport bd_rate(const RDCurve& anchor, const RDCurve& test);

/// Aligned text table of BD-rates; one row per test curve.
std::string format_bd_table(const std::vector<std::pair<std::string, BDRateReport>>& rows);

struct ManifestEntry {
  std::string name;
  std::filesystem::path clean;
  std::optional<std::filesystem::path> noisy;
};

struct DatasetManifest {
  std::string label;
  std::vector<ManifestEntry> entries;

  /// Throws std::runtime_error naming the first entry whose files are missing
  /// or do not decode.
  void validate() const;
};

/// JSON: {"label": ..., "images": [{"name", "clean", "noisy"?}]}; relative
/// paths are resolved against the manifest's directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Clean images of a manifest, in order.
std::vector<ImageBuffer> load_clean_images(const DatasetManifest& manifest);

struct EvalModel {
  net::JicdModel model{nullptr};
  double lambda = 0.0;
};

struct ImageResult {
  std::string name;
  int height = 0;
  int width = 0;
  double base_bpp = 0.0;
  double full_bpp = 0.0;
  double psnr_noisy_vs_clean = 0.0;
  double psnr_denoised_vs_clean = 0.0;
  double psnr_full_vs_noisy = 0.0;
  double psnr_denoised_vs_noisy = 0.0;
};

struct ModelResult {
  std::string model_id;
  double lambda = 0.0;
  std::vector<ImageResult> images;
  RDPoint denoise;  ///< mean PSNR(denoised, clean) at mean base_bpp
  RDPoint noisy;    ///< mean PSNR(full, noisy) at mean full_bpp
};

/// Encodes the noisy version of every manifest image with every model and
/// decodes both layers. Noisy images come from the manifest when given,
/// otherwise from `noise` with the image index as stream. Decode failures
/// rethrow with the image named.
std::vector<ModelResult> evaluate(const std::vector<EvalModel>& models,
                                  const DatasetManifest& manifest, const noise::NoiseSpec& noise);
/// In-memory variant over (name, clean) pairs.
std::vector<ModelResult> evaluate(const std::vector<EvalModel>& models,
                                  const std::vector<std::pair<std::string, ImageBuffer>>& images,
                                  const std::string& dataset, const noise::NoiseSpec& noise);

/// Rate-PSNR figure with one panel per task and one line per dataset.
void write_plot_svg(const std::filesystem::path& path, const std::vector<RDCurve>& curves);

std::string hex_id(std::uint64_t id);

}  // namespace jicd::eval
