#include "rirforge/io/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "rirforge/error.hpp"

namespace rirforge {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::kIsm: return "ism";
    case SourceTag::kSurrogate: return "surrogate";
    case SourceTag::kExternal: return "external";
  }
  return "ism";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "valid") return Split::kValid;
  if (text == "test") return Split::kTest;
  throw Error(ErrorKind::kInvalidArgument, "unknown split '" + std::string(text) + "'");
}

SourceTag parse_source_tag(std::string_view text) {
  if (text == "ism") return SourceTag::kIsm;
  if (text == "surrogate") return SourceTag::kSurrogate;
  if (text == "external") return SourceTag::kExternal;
  throw Error(ErrorKind::kInvalidArgument, "unknown source tag '" + std::string(text) + "'");
}

std::string to_json_line(const ManifestRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["conditioner_path"] = r.conditioner_path;
  j["target_path"] = r.target_path;
  j["room_id"] = r.room_id;
  j["source_id"] = r.source_id;
  j["receiver_id"] = r.receiver_id;
  j["max_order"] = r.max_order;
  j["split"] = to_string(r.split);
  j["source_tag"] = to_string(r.source_tag);
  return j.dump();
}

ManifestRecord record_from_json(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    ManifestRecord r;
    r.id = j.at("id").get<std::string>();
    r.conditioner_path = j.at("conditioner_path").get<std::string>();
    r.target_path = j.at("target_path").get<std::string>();
    r.room_id = j.at("room_id").get<int>();
    r.source_id = j.at("source_id").get<int>();
    r.receiver_id = j.at("receiver_id").get<int>();
    r.max_order = j.at("max_order").get<int>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.source_tag = parse_source_tag(j.at("source_tag").get<std::string>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kIoError, std::string("malformed manifest record: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  for (const ManifestRecord& r : records) out << to_json_line(r) << '\n';
  if (!out) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<ManifestRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(record_from_json(line));
  }
  return records;
}

std::filesystem::path resolve(const std::filesystem::path& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

void validate_manifest(const std::vector<ManifestRecord>& records,
                       const std::filesystem::path& base_dir) {
  std::set<std::string> ids;
  for (const ManifestRecord& r : records) {
    if (!ids.insert(r.id).second) {
      throw Error(ErrorKind::kInvalidArgument, "duplicate manifest id '" + r.id + "'");
    }
    for (const std::string& p : {r.conditioner_path, r.target_path}) {
      if (!std::filesystem::exists(resolve(base_dir, p))) {
        throw Error(ErrorKind::kIoError, "record '" + r.id + "' references missing file " + p);
      }
    }
  }
}

std::vector<Split> assign_splits(std::size_t count, std::mt19937_64& rng,
                                 std::array<double, 3> ratios) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (!(total > 0.0) || ratios[0] < 0.0 || ratios[1] < 0.0 || ratios[2] < 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "split ratios must be non-negative");
  }
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n = static_cast<double>(count);
  const auto n_train = std::min(count, static_cast<std::size_t>(std::llround(n * ratios[0] / total)));
  const auto n_valid =
      std::min(count - n_train, static_cast<std::size_t>(std::llround(n * ratios[1] / total)));
  std::vector<Split> splits(count, Split::kTest);
  for (std::size_t i = 0; i < count; ++i) {
    if (i < n_train) {
      splits[order[i]] = Split::kTrain;
    } else if (i < n_train + n_valid) {
      splits[order[i]] = Split::kValid;
    }
  }
  return splits;
}

std::vector<ManifestRecord> filter_split(const std::vector<ManifestRecord>& records,
                                         Split split) {
  std::vector<ManifestRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const ManifestRecord& r) { return r.split == split; });
  return out;
}

}  // namespace rirforge
