#include "gpss/run_config.hpp"

#include "gpss/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

namespace gpss {

using nlohmann::json;

void RunConfig::validate() const {
  if (!(frame_seconds > 0.0)) throw ParameterError("config: frame_seconds must be positive");
  if (!(overlap >= 0.0) || !(overlap < 1.0)) {
    throw ParameterError("config: overlap must lie in [0, 1)");
  }
  if (d_components < 1) throw ParameterError("config: D must be >= 1");
  if (m_max < 0) throw ParameterError("config: m_max must be >= 0");
  if (jobs < 0) throw ParameterError("config: jobs must be >= 0");
}

json RunConfig::to_json() const {
  return json{{"mixture", mixture},
              {"kernels", kernels},
              {"out", out},
              {"frame_seconds", frame_seconds},
              {"overlap", overlap},
              {"D", d_components},
              {"m_max", m_max},
              {"seed", seed},
              {"strict", strict},
              {"full", full},
              {"free_noise", free_noise},
              {"jobs", jobs}};
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw IoError("config: expected a JSON object");
  static const std::set<std::string> known{
      "mixture", "kernels", "out",  "frame_seconds", "overlap",    "D",
      "m_max",   "seed",    "strict", "full",        "free_noise", "jobs"};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw IoError("config: unknown key '" + item.key() + "'");
    }
  }
  RunConfig config;
  try {
    if (j.contains("mixture")) j.at("mixture").get_to(config.mixture);
    if (j.contains("kernels")) j.at("kernels").get_to(config.kernels);
    if (j.contains("out")) j.at("out").get_to(config.out);
    if (j.contains("frame_seconds")) j.at("frame_seconds").get_to(config.frame_seconds);
    if (j.contains("overlap")) j.at("overlap").get_to(config.overlap);
    if (j.contains("D")) j.at("D").get_to(config.d_components);
    if (j.contains("m_max")) j.at("m_max").get_to(config.m_max);
    if (j.contains("seed")) j.at("seed").get_to(config.seed);
    if (j.contains("strict")) j.at("strict").get_to(config.strict);
    if (j.contains("full")) j.at("full").get_to(config.full);
    if (j.contains("free_noise")) j.at("free_noise").get_to(config.free_noise);
    if (j.contains("jobs")) j.at("jobs").get_to(config.jobs);
  } catch (const json::exception& e) {
    throw IoError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse config file " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream out_stream(path);
  if (!out_stream) throw IoError("cannot write config file: " + path.string());
  out_stream << to_json().dump(2) << "\n";
}

} // namespace gpss
