#include "jicd/model_config.hpp"

#include <stdexcept>

namespace jicd::net {

std::string to_string(Profile p) {
  switch (p) {
    case Profile::full: return "full";
    case Profile::toy: return "toy";
    case Profile::custom: return "custom";
  }
  return "custom";
}

Profile parse_profile(const std::string& name) {
  if (name == "full") return Profile::full;
  if (name == "toy") return Profile::toy;
  if (name == "custom") return Profile::custom;
  throw std::invalid_argument("unknown model profile '" + name + "'");
}

ModelConfig ModelConfig::full(int enhancement) {
  ModelConfig c;
  c.total_channels = 192;
  c.base_channels = 192 - enhancement;
  c.width = 192;
  c.hyper_width = 192;
  c.profile = Profile::full;
  c.validate();
  return c;
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.total_channels = 48;
  c.base_channels = 40;
  c.width = 48;
  c.hyper_width = 48;
  c.profile = Profile::toy;
  return c;
}

void ModelConfig::validate() const {
  if (total_channels < 1) throw std::invalid_argument("total_channels must be >= 1");
  if (base_channels < 1 || base_channels > total_channels) {
    throw std::invalid_argument("base_channels must lie in [1, total_channels]");
  }
  if (width < 1 || hyper_width < 1) throw std::invalid_argument("block widths must be >= 1");
  if (attention && width < 2) throw std::invalid_argument("attention needs width >= 2");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"total_channels", c.total_channels},
                     {"base_channels", c.base_channels},
                     {"width", c.width},
                     {"hyper_width", c.hyper_width},
                     {"attention", c.attention},
                     {"profile", to_string(c.profile)}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.total_channels = j.at("total_channels").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.width = j.at("width").get<int>();
  c.hyper_width = j.at("hyper_width").get<int>();
  c.attention = j.value("attention", false);
  c.profile = parse_profile(j.value("profile", std::string("custom")));
  c.validate();
}

}  // namespace jicd::net
