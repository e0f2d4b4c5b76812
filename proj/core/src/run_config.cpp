#include "jicd/run_config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace jicd::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config key '" + key + "' needs a value list");
  return out;
}

std::array<double, 3> to_triple(const std::string& key, const std::string& v) {
  const auto list = to_list(key, v);
  if (list.size() == 1) return {list[0], list[0], list[0]};
  if (list.size() != 3) {
    throw std::invalid_argument("config key '" + key + "' needs 1 or 3 values");
  }
  return {list[0], list[1], list[2]};
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <typename Range>
std::string join(const Range& r) {
  std::string out;
  for (double v : r) out += (out.empty() ? "" : ",") + num(v);
  return out;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": empty key");
    }
    out.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_key_values(buf.str());
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || trim(text.substr(0, eq)).empty()) {
    throw std::invalid_argument("override '" + text + "' is not of the form key=value");
  }
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

void set(RunConfig& config, const std::string& key, const std::string& v) {
  auto& t = config.train;
  auto& m = t.model;
  auto& n = t.noise;
  if (key == "lambda") t.lambda = to_double(key, v);
  else if (key == "w") t.w = to_double(key, v);
  else if (key == "crop") t.crop = to_int<int>(key, v);
  else if (key == "batch") t.batch = to_int<int>(key, v);
  else if (key == "epochs") t.epochs = to_int<int>(key, v);
  else if (key == "lr_init") t.lr_init = to_double(key, v);
  else if (key == "lr_factor") t.lr_factor = to_double(key, v);
  else if (key == "plateau_patience") t.plateau_patience = to_int<int>(key, v);
  else if (key == "plateau_threshold") t.plateau_threshold = to_double(key, v);
  else if (key == "steps_per_epoch") t.steps_per_epoch = to_int<int>(key, v);
  else if (key == "max_steps") t.max_steps = to_int<std::int64_t>(key, v);
  else if (key == "seed") t.seed = to_int<std::uint64_t>(key, v);
  else if (key == "model.profile") {
    const auto p = net::parse_profile(v);
    if (p == net::Profile::full) m = net::ModelConfig::full();
    else if (p == net::Profile::toy) m = net::ModelConfig::toy();
    else m.profile = p;
  }
  else if (key == "model.total_channels") m.total_channels = to_int<int>(key, v);
  else if (key == "model.base_channels") m.base_channels = to_int<int>(key, v);
  else if (key == "model.width") m.width = to_int<int>(key, v);
  else if (key == "model.hyper_width") m.hyper_width = to_int<int>(key, v);
  else if (key == "model.attention") m.attention = to_bool(key, v);
  else if (key == "noise.kind") n.kind = noise::parse_noise_kind(v);
  else if (key == "noise.sigma") n.sigma = to_double(key, v);
  else if (key == "noise.sigma_set") n.sigma_set = to_list(key, v);
  else if (key == "noise.a") n.a = to_triple(key, v);
  else if (key == "noise.b") n.b = to_triple(key, v);
  else if (key == "noise.exact_poisson") n.exact_poisson = to_bool(key, v);
  else if (key == "noise.seed") n.seed = to_int<std::uint64_t>(key, v);
  else if (key == "data.manifest") config.manifest = v;
  else if (key == "data.synthetic_count") config.synthetic_count = to_int<int>(key, v);
  else if (key == "data.synthetic_size") config.synthetic_size = to_int<int>(key, v);
  else if (key == "data.synthetic_seed") config.synthetic_seed = to_int<std::uint64_t>(key, v);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig resolve(const KeyValues& entries, const KeyValues& overrides) {
  RunConfig config;
  KeyValues all = entries;
  all.insert(all.end(), overrides.begin(), overrides.end());
  for (const auto& [k, v] : all) {
    if (k == "model.profile") set(config, k, v);
  }
  for (const auto& [k, v] : all) {
    if (k != "model.profile") set(config, k, v);
  }
  config.train.validate();
  return config;
}

std::string to_text(const RunConfig& c) {
  const auto& t = c.train;
  const auto& m = t.model;
  const auto& n = t.noise;
  std::ostringstream os;
  os << "lambda = " << num(t.lambda) << '\n'
     << "w = " << num(t.w) << '\n'
     << "crop = " << t.crop << '\n'
     << "batch = " << t.batch << '\n'
     << "epochs = " << t.epochs << '\n'
     << "lr_init = " << num(t.lr_init) << '\n'
     << "lr_factor = " << num(t.lr_factor) << '\n'
     << "plateau_patience = " << t.plateau_patience << '\n'
     << "plateau_threshold = " << num(t.plateau_threshold) << '\n'
     << "steps_per_epoch = " << t.steps_per_epoch << '\n'
     << "max_steps = " << t.max_steps << '\n'
     << "seed = " << t.seed << '\n'
     << "model.profile = " << net::to_string(m.profile) << '\n'
     << "model.total_channels = " << m.total_channels << '\n'
     << "model.base_channels = " << m.base_channels << '\n'
     << "model.width = " << m.width << '\n'
     << "model.hyper_width = " << m.hyper_width << '\n'
     << "model.attention = " << (m.attention ? "true" : "false") << '\n'
     << "noise.kind = " << noise::to_string(n.kind) << '\n'
     << "noise.sigma = " << num(n.sigma) << '\n'
     << "noise.sigma_set = " << join(n.sigma_set) << '\n'
     << "noise.a = " << join(n.a) << '\n'
     << "noise.b = " << join(n.b) << '\n'
     << "noise.exact_poisson = " << (n.exact_poisson ? "true" : "false") << '\n'
     << "noise.seed = " << n.seed << '\n'
     << "data.manifest = " << c.manifest << '\n'
     << "data.synthetic_count = " << c.synthetic_count << '\n'
     << "data.synthetic_size = " << c.synthetic_size << '\n'
     << "data.synthetic_seed = " << c.synthetic_seed << '\n';
  return os.str();
}

}  // namespace jicd::config
