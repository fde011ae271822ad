#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace rirforge {

enum class Split { kTrain, kValid, kTest };
enum class SourceTag { kIsm, kSurrogate, kExternal };

std::string_view to_string(Split split);
std::string_view to_string(SourceTag tag);
Split parse_split(std::string_view text);
SourceTag parse_source_tag(std::string_view text);

// One conditioner/target pair. Paths are stored as written; relative paths
// resolve against the manifest's directory.
struct ManifestRecord {
  std::string id;
  std::string conditioner_path;
  std::string target_path;
  int room_id = 0;
  int source_id = 0;
  int receiver_id = 0;
  int max_order = 0;
  Split split = Split::kTrain;
  SourceTag source_tag = SourceTag::kIsm;

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

std::string to_json_line(const ManifestRecord& record);
ManifestRecord record_from_json(std::string_view line);

// One JSON object per line, in record order.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

// Throws kInvalidArgument on duplicate ids and kIoError on missing files.
void validate_manifest(const std::vector<ManifestRecord>& records,
                       const std::filesystem::path& base_dir);

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& path);

// Shuffles [0, count) and cuts it at the given ratios (default 8:1:1). Train
// and valid sizes are rounded; the test split takes the remainder.
std::vector<Split> assign_splits(std::size_t count, std::mt19937_64& rng,
                                 std::array<double, 3> ratios = {8.0, 1.0, 1.0});

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records, Split split);

}  // namespace rirforge
