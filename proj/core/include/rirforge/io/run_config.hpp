#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rirforge/nn/unet.hpp"

namespace rirforge {

enum class Preset { kPaper, kDesk };

Preset parse_preset(const std::string& text);
std::string to_string(Preset preset);

struct RunConfig {
  Preset preset = Preset::kPaper;
  int sample_rate = 16000;
  std::size_t k = 24576;
  int t_steps = 1000;
  double schedule_offset = 0.008;
  double lambda = 0.0;
  double cfg_dropout = 0.2;
  double guidance = 1.0;
  int max_order = 3;
  std::uint64_t seed = 0;
  double keep_seconds = 0.0025;
  double edc_floor_db = -60.0;
  double conditioner_window_seconds = 0.080;  // conditioners zeroed from here on; 0 keeps all

  // simulate
  int rooms = 25;
  int sources = 10;
  int receivers = 40;

  // train
  int epochs = 1;
  std::int64_t max_steps = 0;
  std::size_t batch_size = 4;
  double learning_rate = 1e-4;
  double clip_norm = 1.0;
  double mix_ratio_a = 8.0;
  double mix_ratio_b = 2.0;

  // paths; empty means unset
  std::string dataset_dir;
  std::string manifest;
  std::string surrogate_manifest;
  std::string run_dir;
  std::string checkpoint;
  std::string output_dir;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Defaults for a preset. Desk: fs = 8 kHz, K = 2048, T = 100, small network.
RunConfig preset_defaults(Preset preset);

// Overwrites the fields present in a JSON object. Unknown keys throw
// kInvalidConfig so that typos are not silently ignored.
void apply_json(RunConfig& config, const std::string& json_text);

// Preset defaults, then the file's keys. The preset is taken from
// `preset_override` if non-empty, else from the file, else paper.
RunConfig load_run_config(const std::filesystem::path& path, const std::string& preset_override);

std::string to_json(const RunConfig& config);

// Throws kInvalidConfig for K not divisible by 128, s < 1, lambda < 0, p
// outside [0, 1], and other out-of-range values.
void validate(const RunConfig& config);

nn::UNetConfig network_config(const RunConfig& config);

}  // namespace rirforge
