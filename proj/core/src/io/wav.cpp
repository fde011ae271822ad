#include "rirforge/io/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw Error(ErrorKind::kIoError, "truncated WAV " + path.string());
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  return value;
}

}  // namespace

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * sizeof(float));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, kFormatFloat);
  put<std::uint16_t>(out, 1);  // channels
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * sizeof(float));
  put<std::uint16_t>(out, sizeof(float));
  put<std::uint16_t>(out, 32);
  out += "data";
  put<std::uint32_t>(out, data_bytes);
  for (double v : samples) put<float>(out, static_cast<float>(v));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

Rir read_wav(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw Error(ErrorKind::kIoError, path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  bool have_format = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const auto size = get<std::uint32_t>(bytes, pos + 4, path);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw Error(ErrorKind::kIoError, "truncated WAV " + path.string());
    if (id == "fmt ") {
      format = get<std::uint16_t>(bytes, body, path);
      channels = get<std::uint16_t>(bytes, body + 2, path);
      rate = get<std::uint32_t>(bytes, body + 4, path);
      bits = get<std::uint16_t>(bytes, body + 14, path);
      have_format = true;
    } else if (id == "data") {
      if (!have_format) throw Error(ErrorKind::kIoError, "data before fmt in " + path.string());
      if (channels != 1) throw Error(ErrorKind::kIoError, path.string() + " is not mono");
      Rir rir;
      rir.sample_rate = static_cast<int>(rate);
      if (format == kFormatFloat && bits == 32) {
        rir.samples.resize(size / 4);
        for (std::size_t i = 0; i < rir.samples.size(); ++i) {
          rir.samples[i] = get<float>(bytes, body + 4 * i, path);
        }
      } else if (format == kFormatPcm && bits == 16) {
        rir.samples.resize(size / 2);
        for (std::size_t i = 0; i < rir.samples.size(); ++i) {
          rir.samples[i] = get<std::int16_t>(bytes, body + 2 * i, path) / 32768.0;
        }
      } else {
        throw Error(ErrorKind::kIoError, path.string() + " uses an unsupported sample format");
      }
      return rir;
    }
    pos = body + size + (size & 1u);
  }
  throw Error(ErrorKind::kIoError, path.string() + " has no data chunk");
}

}  // namespace rirforge
