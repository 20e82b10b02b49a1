#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gpss {

// Separation run configuration; mirrors the CLI flags and round-trips through
// JSON. Unknown keys are rejected on parse.
struct RunConfig {
  std::string mixture;
  std::vector<std::string> kernels;
  std::string out;
  double frame_seconds = 0.125;
  double overlap = 0.5;
  int d_components = 15;
  int m_max = 0; // 0 = frame_length / 4
  std::uint64_t seed = 0;
  bool strict = false;
  bool full = false;
  bool free_noise = false;
  int jobs = 0; // 0 = hardware concurrency

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool operator==(const RunConfig&) const = default;
};

} // namespace gpss
