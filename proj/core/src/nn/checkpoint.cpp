#include "rirforge/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "rirforge/error.hpp"

namespace rirforge::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'I', 'R', 'F'};

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) {
    throw Error(ErrorKind::kCorruptCheckpoint, "file ends inside the preamble");
  }
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

struct Entry {
  std::string group;
  const ParameterSet* set;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json header;
  header["config"] = nlohmann::json::parse(to_json(checkpoint.config));
  header["config_hash"] = hex(config_hash(checkpoint.config));
  header["optimizer_step"] = checkpoint.optimizer.step;
  header["metadata"] = nlohmann::json::parse(checkpoint.metadata_json);

  std::vector<Entry> groups{{"params", &checkpoint.params}};
  if (!checkpoint.optimizer.empty()) {
    groups.push_back({"adam_m", &checkpoint.optimizer.first_moment});
    groups.push_back({"adam_v", &checkpoint.optimizer.second_moment});
  }

  std::string blobs;
  nlohmann::json directory = nlohmann::json::array();
  for (const Entry& entry : groups) {
    for (std::size_t i = 0; i < entry.set->size(); ++i) {
      const Tensor& t = entry.set->tensors[i];
      directory.push_back({{"group", entry.group},
                           {"name", entry.set->names[i]},
                           {"shape", t.shape},
                           {"offset", blobs.size()},
                           {"count", t.numel()}});
      blobs.append(reinterpret_cast<const char*>(t.data.data()), t.numel() * sizeof(double));
    }
  }
  header["tensors"] = directory;
  const std::string header_text = header.dump();

  std::string out;
  put<std::uint32_t>(out, kCheckpointVersion);
  out.append(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  out += blobs;

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)),
                          std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (pos + sizeof(kMagic) > bytes.size() ||
      std::memcmp(bytes.data() + pos, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kCorruptCheckpoint, "missing checkpoint magic");
  }
  pos += sizeof(kMagic);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "checkpoint format version " + std::to_string(version) + " is not supported");
  }
  const auto header_size = get<std::uint64_t>(bytes, pos);
  if (header_size > bytes.size() - pos) {
    throw Error(ErrorKind::kCorruptCheckpoint, "file ends inside the header");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptCheckpoint, std::string("unreadable header: ") + e.what());
  }
  pos += header_size;
  const std::size_t blob_start = pos;

  Checkpoint checkpoint;
  try {
    checkpoint.config = config_from_json(header.at("config").dump());
    if (header.at("config_hash").get<std::string>() != hex(config_hash(checkpoint.config))) {
      throw Error(ErrorKind::kVersionMismatch, "config hash does not match stored config");
    }
    checkpoint.optimizer.step = header.at("optimizer_step").get<std::int64_t>();
    checkpoint.metadata_json = header.value("metadata", nlohmann::json::object()).dump();

    for (const auto& entry : header.at("tensors")) {
      const auto group = entry.at("group").get<std::string>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = entry.at("count").get<std::size_t>();
      auto shape = entry.at("shape").get<std::vector<std::size_t>>();
      if (element_count(shape) != count ||
          blob_start + offset + count * sizeof(double) > bytes.size()) {
        throw Error(ErrorKind::kCorruptCheckpoint,
                    "tensor '" + entry.at("name").get<std::string>() + "' is truncated");
      }
      std::vector<double> data(count);
      std::memcpy(data.data(), bytes.data() + blob_start + offset, count * sizeof(double));
      ParameterSet* target = group == "params"   ? &checkpoint.params
                             : group == "adam_m" ? &checkpoint.optimizer.first_moment
                             : group == "adam_v" ? &checkpoint.optimizer.second_moment
                                                 : nullptr;
      if (target == nullptr) {
        throw Error(ErrorKind::kCorruptCheckpoint, "unknown tensor group '" + group + "'");
      }
      target->names.push_back(entry.at("name").get<std::string>());
      target->tensors.emplace_back(std::move(shape), std::move(data));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kCorruptCheckpoint, std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInvalidConfig) {
      throw Error(ErrorKind::kCorruptCheckpoint, e.what());
    }
    throw;
  }

  const UNet net(checkpoint.config);
  if (checkpoint.params.names != net.param_names()) {
    throw Error(ErrorKind::kCorruptCheckpoint, "parameter directory does not match config");
  }
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    if (checkpoint.params.tensors[i].shape != net.param_shapes()[i]) {
      throw Error(ErrorKind::kCorruptCheckpoint,
                  "parameter '" + checkpoint.params.names[i] + "' has the wrong shape");
    }
  }
  return checkpoint;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const UNetConfig& expected) {
  Checkpoint checkpoint = load_checkpoint(path);
  if (config_hash(checkpoint.config) != config_hash(expected)) {
    throw Error(ErrorKind::kVersionMismatch, "checkpoint was trained with another config");
  }
  return checkpoint;
}

}  // namespace rirforge::nn
