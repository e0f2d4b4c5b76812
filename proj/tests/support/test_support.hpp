#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "jicd/model_config.hpp"

namespace jicd::testing {

/// Tiny model for structural tests: C=8, i=6, widths 8.
inline net::ModelConfig micro_config() {
  net::ModelConfig c;
  c.total_channels = 8;
  c.base_channels = 6;
  c.width = 8;
  c.hyper_width = 8;
  c.profile = net::Profile::custom;
  return c;
}

inline std::filesystem::path data_dir() { return JICD_TEST_DATA_DIR; }
inline std::filesystem::path config_dir() { return JICD_CONFIG_DIR; }

/// Golden fixture produced by jicd_make_golden with these settings.
struct Golden {
  static constexpr std::uint64_t kModelSeed = 2024;
  static constexpr std::uint64_t kImageSeed = 5;
  static constexpr int kHeight = 70;
  static constexpr int kWidth = 90;
  static constexpr double kSigma = 25.0;
  static constexpr std::uint64_t kNoiseSeed = 11;
};

}  // namespace jicd::testing
