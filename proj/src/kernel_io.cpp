#include "gpss/kernel_io.hpp"

#include "gpss/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>

namespace gpss {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw IoError(context + ": unknown key '" + item.key() + "'");
    }
  }
}

double require_number(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw IoError(context + ": missing numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

} // namespace

json kernel_to_json(const KernelFile& file) {
  json components = json::array();
  for (const auto& c : file.params.components) {
    components.push_back({{"weight", c.weight},
                          {"freq_hz", c.angular_frequency / (2.0 * M_PI)}});
  }
  json j{{"name", file.name},
         {"sample_rate_hz", file.sample_rate_hz},
         {"variance", file.params.variance},
         {"lengthscale_s", file.params.lengthscale},
         {"components", components}};
  if (file.final_mse) j["final_mse"] = *file.final_mse;
  if (file.iterations) j["iterations"] = *file.iterations;
  return j;
}

KernelFile kernel_from_json(const json& j) {
  if (!j.is_object()) throw IoError("kernel file: expected a JSON object");
  reject_unknown_keys(j,
                      {"name", "sample_rate_hz", "variance", "lengthscale_s",
                       "components", "final_mse", "iterations"},
                      "kernel file");
  KernelFile file;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) throw IoError("kernel file: 'name' must be a string");
    file.name = j.at("name").get<std::string>();
  }
  file.sample_rate_hz = require_number(j, "sample_rate_hz", "kernel file");
  file.params.variance = require_number(j, "variance", "kernel file");
  file.params.lengthscale = require_number(j, "lengthscale_s", "kernel file");
  if (!j.contains("components") || !j.at("components").is_array() ||
      j.at("components").empty()) {
    throw IoError("kernel file: 'components' must be a non-empty array");
  }
  for (const auto& cj : j.at("components")) {
    reject_unknown_keys(cj, {"weight", "freq_hz"}, "kernel component");
    MsmComponent c;
    c.weight = require_number(cj, "weight", "kernel component");
    c.angular_frequency = 2.0 * M_PI * require_number(cj, "freq_hz", "kernel component");
    file.params.components.push_back(c);
  }
  if (j.contains("final_mse")) file.final_mse = require_number(j, "final_mse", "kernel file");
  if (j.contains("iterations")) {
    if (!j.at("iterations").is_number_integer()) {
      throw IoError("kernel file: 'iterations' must be an integer");
    }
    file.iterations = j.at("iterations").get<int>();
  }
  file.params.canonicalize();
  try {
    file.params.validate();
  } catch (const ParameterError& e) {
    throw IoError(std::string("kernel file: ") + e.what());
  }
  return file;
}

KernelFile read_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open kernel file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse kernel file " + path.string() + ": " + e.what());
  }
  return kernel_from_json(j);
}

void write_kernel_file(const std::filesystem::path& path, const KernelFile& file) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write kernel file: " + path.string());
  out << kernel_to_json(file).dump(2) << "\n";
}

} // namespace gpss
