#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace gpss {

struct WavData {
  Eigen::VectorXd samples; // mono, nominally in [-1, 1]
  double sample_rate = 0.0;
};

// Reads a mono RIFF WAV file. Accepts 16-bit PCM (scaled by 1/32768) and
// 32-bit IEEE float. Anything else is an IoError.
WavData read_wav(const std::filesystem::path& path);

// Writes a mono 32-bit IEEE float WAV file.
void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples,
               double sample_rate);

} // namespace gpss
