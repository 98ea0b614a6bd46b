#include <charconv>
#include <fstream>
#include <sstream>

#include "castkit/cast.hpp"
#include "castkit/errors.hpp"

namespace castkit {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': bad number '" + value + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': bad integer '" + value + "'");
  return out;
}

}  // namespace

void CastConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (similarity_schedule.size() < iterations)
    throw ConfigError("similarity_schedule is shorter than iterations");
  for (std::size_t i = 0; i < similarity_schedule.size(); ++i) {
    const double s = similarity_schedule[i];
    if (!(s >= -1.0 && s <= 1.0))
      throw ConfigError("similarity_schedule values must lie in [-1, 1]");
    if (i > 0 && s < similarity_schedule[i - 1])
      throw ConfigError("similarity_schedule must be non-decreasing");
  }
  if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
  if (!(delete_threshold < merge_threshold))
    throw ConfigError("delete_threshold must be below merge_threshold");
}

CastConfig parse_cast_config(const std::string& text) {
  CastConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "iterations") {
      config.iterations = to_uint(key, value);
    } else if (key == "similarity_schedule") {
      config.similarity_schedule.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        config.similarity_schedule.push_back(to_double(key, trim(item)));
    } else if (key == "min_pts") {
      config.min_pts = to_uint(key, value);
    } else if (key == "merge_threshold") {
      config.merge_threshold = to_double(key, value);
    } else if (key == "delete_threshold") {
      config.delete_threshold = to_double(key, value);
    } else if (key == "dedup_threshold") {
      config.dedup_threshold = to_double(key, value);
    } else if (key == "overlap_threshold") {
      config.overlap_threshold = to_double(key, value);
    } else if (key == "histogram_sample_folders") {
      config.histogram_sample_folders = to_uint(key, value);
    } else if (key == "histogram_seed") {
      config.histogram_seed = to_uint(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

CastConfig load_cast_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_cast_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace castkit
