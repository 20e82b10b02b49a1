#pragma once

#include "gpss/kernel.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace gpss {

// On-disk kernel description. Frequencies are stored in Hz and converted to
// rad/s on load; all numbers are IEEE-754 doubles and survive a JSON round
// trip bit-exactly.
struct KernelFile {
  std::string name;
  double sample_rate_hz = 0.0;
  MsmKernelParams params;
  std::optional<double> final_mse;  // present when written by a fit
  std::optional<int> iterations;
};

nlohmann::json kernel_to_json(const KernelFile& file);
KernelFile kernel_from_json(const nlohmann::json& j); // rejects unknown keys

KernelFile read_kernel_file(const std::filesystem::path& path);
void write_kernel_file(const std::filesystem::path& path, const KernelFile& file);

} // namespace gpss
