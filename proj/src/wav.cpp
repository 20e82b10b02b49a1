#include "gpss/wav.hpp"

#include "gpss/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace gpss {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

template <typename T>
T read_le(const unsigned char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value; // little-endian host assumed
}

template <typename T>
void append_le(std::vector<unsigned char>& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

} // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t size = read_le<std::uint32_t>(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw IoError("truncated WAV chunk: " + path.string());
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("malformed fmt chunk: " + path.string());
      format = read_le<std::uint16_t>(bytes.data() + body);
      channels = read_le<std::uint16_t>(bytes.data() + body + 2);
      rate = read_le<std::uint32_t>(bytes.data() + body + 4);
      bits = read_le<std::uint16_t>(bytes.data() + body + 14);
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size % 2); // chunks are word aligned
  }
  if (format == 0) throw IoError("WAV file has no fmt chunk: " + path.string());
  if (data == nullptr) throw IoError("WAV file has no data chunk: " + path.string());
  if (channels != 1) throw IoError("only mono WAV files are supported: " + path.string());

  WavData wav;
  wav.sample_rate = static_cast<double>(rate);
  if (format == kFormatPcm && bits == 16) {
    const std::uint32_t count = data_size / 2;
    wav.samples.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      wav.samples[i] = read_le<std::int16_t>(data + 2 * i) / 32768.0;
    }
  } else if (format == kFormatFloat && bits == 32) {
    const std::uint32_t count = data_size / 4;
    wav.samples.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      wav.samples[i] = static_cast<double>(read_le<float>(data + 4 * i));
    }
  } else {
    throw IoError("unsupported WAV encoding (need 16-bit PCM or 32-bit float): " +
                  path.string());
  }
  if (wav.samples.size() == 0) throw IoError("WAV file has no samples: " + path.string());
  return wav;
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples,
               double sample_rate) {
  if (samples.size() == 0) throw InputSizeError("write_wav: no samples");
  if (!(sample_rate > 0.0)) throw ParameterError("write_wav: sample_rate must be positive");

  const std::uint32_t count = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t data_size = count * 4;
  std::vector<unsigned char> out;
  out.reserve(58 + data_size);

  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  append_le<std::uint32_t>(out, 4 + (8 + 18) + (8 + 4) + (8 + data_size));
  out.insert(out.end(), {'W', 'A', 'V', 'E'});

  out.insert(out.end(), {'f', 'm', 't', ' '});
  append_le<std::uint32_t>(out, 18);
  append_le<std::uint16_t>(out, kFormatFloat);
  append_le<std::uint16_t>(out, 1); // mono
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * 4);
  append_le<std::uint16_t>(out, 4);  // block align
  append_le<std::uint16_t>(out, 32); // bits per sample
  append_le<std::uint16_t>(out, 0);  // extension size

  out.insert(out.end(), {'f', 'a', 'c', 't'});
  append_le<std::uint32_t>(out, 4);
  append_le<std::uint32_t>(out, count);

  out.insert(out.end(), {'d', 'a', 't', 'a'});
  append_le<std::uint32_t>(out, data_size);
  for (std::uint32_t i = 0; i < count; ++i) {
    append_le<float>(out, static_cast<float>(samples[i]));
  }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write WAV file: " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write to WAV file: " + path.string());
}

} // namespace gpss
