#pragma once

#include <filesystem>
#include <span>

#include "rirforge/signal.hpp"

namespace rirforge {

// Mono RIFF/WAVE with 32-bit IEEE float samples.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate);
inline void write_wav(const std::filesystem::path& path, const Rir& rir) {
  write_wav(path, rir.view(), rir.sample_rate);
}

// Reads mono float32 or 16-bit PCM WAV files. Throws kIoError on anything else.
Rir read_wav(const std::filesystem::path& path);

}  // namespace rirforge
