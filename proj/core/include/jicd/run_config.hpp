#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "jicd/trainer.hpp"

namespace jicd::config {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Throws std::invalid_argument naming the line on malformed input.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

/// Splits a `dotted.key=value` override.
std::pair<std::string, std::string> parse_override(const std::string& text);

/// Everything a training run needs: the training config and where its images
/// come from (a manifest, or a generated synthetic corpus).
struct RunConfig {
  train::TrainConfig train = train::TrainConfig::toy();
  std::string manifest;
  int synthetic_count = 120;
  int synthetic_size = 128;
  std::uint64_t synthetic_seed = 1;
};

/// Sets one dotted key. `model.profile` resets every model field to the
/// profile's preset. Throws std::invalid_argument on unknown keys or
/// unparsable values.
void set(RunConfig& config, const std::string& key, const std::string& value);

/// Applies `model.profile` first, then the remaining keys in order.
RunConfig resolve(const KeyValues& entries, const KeyValues& overrides = {});

/// Every key with its effective value, in a form resolve() reads back.
std::string to_text(const RunConfig& config);

}  // namespace jicd::config
