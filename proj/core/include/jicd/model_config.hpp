#pragma once

#include <nlohmann/json.hpp>
#include <string>

namespace jicd::net {

enum class Profile { full, toy, custom };

std::string to_string(Profile p);
Profile parse_profile(const std::string& name);

/// Shape of the codec: latent channel budget, its base/enhancement split and
/// the widths of the internal blocks.
struct ModelConfig {
  static constexpr int kLatentStride = 16;  ///< analysis downsampling
  static constexpr int kHyperStride = 4;    ///< hyper analysis, relative to the latent
  static constexpr int kPadMultiple = kLatentStride * kHyperStride;

  int total_channels = 192;  ///< C
  int base_channels = 160;   ///< i; channels [0, i) form the base layer
  int width = 192;           ///< internal width of analysis/synthesis
  int hyper_width = 192;     ///< hyper-latent channels
  bool attention = false;    ///< attention blocks in analysis/synthesis
  Profile profile = Profile::full;

  int enhancement_channels() const { return total_channels - base_channels; }
  /// Channels of the hyper-synthesis output shared by both layer heads.
  int hyper_feature_channels() const { return 2 * total_channels; }

  /// Full-scale model; `enhancement` is C - i (32, 12 or 2 for the
  /// noise-specific models, 12 for variable sigma).
  static ModelConfig full(int enhancement = 32);
  /// Desk-scale model: C=48, i=40, widths 48.
  static ModelConfig toy();

  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace jicd::net
