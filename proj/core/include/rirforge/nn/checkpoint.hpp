#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rirforge/nn/optimizer.hpp"
#include "rirforge/nn/tensor.hpp"
#include "rirforge/nn/unet.hpp"

namespace rirforge::nn {

// File layout (little-endian):
//   u32 format version | "RIRF" | u64 header bytes | JSON header | f64 blobs
// The header records the network config, its hash, a tensor directory
// (name, group, shape, byte offset into the blob area) and free-form metadata.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  UNetConfig config;
  ParameterSet params;
  AdamState optimizer;
  std::string metadata_json = "{}";
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Throws kCorruptCheckpoint for truncated or malformed files and
// kVersionMismatch for an unknown format version or a config hash that does
// not match the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// As above, additionally requiring the stored config to equal `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetConfig& expected);

}  // namespace rirforge::nn
