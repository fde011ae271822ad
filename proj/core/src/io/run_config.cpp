#include "rirforge/io/run_config.hpp"

#include <fstream>
#include <iterator>

#include <json.hpp>

#include "rirforge/error.hpp"

namespace rirforge {
namespace {

using Json = nlohmann::ordered_json;

template <typename T>
void read_field(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

Preset parse_preset(const std::string& text) {
  if (text == "paper") return Preset::kPaper;
  if (text == "desk") return Preset::kDesk;
  throw Error(ErrorKind::kInvalidConfig, "unknown preset '" + text + "'");
}

std::string to_string(Preset preset) { return preset == Preset::kDesk ? "desk" : "paper"; }

RunConfig preset_defaults(Preset preset) {
  RunConfig config;
  config.preset = preset;
  if (preset == Preset::kDesk) {
    config.sample_rate = 8000;
    config.k = 2048;
    config.t_steps = 100;
    config.rooms = 2;
    config.sources = 2;
    config.receivers = 4;
  }
  return config;
}

void apply_json(RunConfig& c, const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kInvalidConfig, "config must be a JSON object");

  const Json known = Json::parse(to_json(c));
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::kInvalidConfig, "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("preset")) c.preset = parse_preset(j.at("preset").get<std::string>());
    read_field(j, "sample_rate", c.sample_rate);
    read_field(j, "k", c.k);
    read_field(j, "t_steps", c.t_steps);
    read_field(j, "schedule_offset", c.schedule_offset);
    read_field(j, "lambda", c.lambda);
    read_field(j, "cfg_dropout", c.cfg_dropout);
    read_field(j, "guidance", c.guidance);
    read_field(j, "max_order", c.max_order);
    read_field(j, "seed", c.seed);
    read_field(j, "keep_seconds", c.keep_seconds);
    read_field(j, "edc_floor_db", c.edc_floor_db);
    read_field(j, "conditioner_window_seconds", c.conditioner_window_seconds);
    read_field(j, "rooms", c.rooms);
    read_field(j, "sources", c.sources);
    read_field(j, "receivers", c.receivers);
    read_field(j, "epochs", c.epochs);
    read_field(j, "max_steps", c.max_steps);
    read_field(j, "batch_size", c.batch_size);
    read_field(j, "learning_rate", c.learning_rate);
    read_field(j, "clip_norm", c.clip_norm);
    read_field(j, "mix_ratio_a", c.mix_ratio_a);
    read_field(j, "mix_ratio_b", c.mix_ratio_b);
    read_field(j, "dataset_dir", c.dataset_dir);
    read_field(j, "manifest", c.manifest);
    read_field(j, "surrogate_manifest", c.surrogate_manifest);
    read_field(j, "run_dir", c.run_dir);
    read_field(j, "checkpoint", c.checkpoint);
    read_field(j, "output_dir", c.output_dir);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("bad config value: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path, const std::string& preset_override) {
  std::string text = "{}";
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIoError, "cannot open config " + path.string());
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  Preset preset = Preset::kPaper;
  if (!preset_override.empty()) {
    preset = parse_preset(preset_override);
  } else {
    try {
      const Json j = Json::parse(text);
      if (j.is_object() && j.contains("preset")) preset = parse_preset(j.at("preset").get<std::string>());
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
    }
  }
  RunConfig config = preset_defaults(preset);
  apply_json(config, text);
  config.preset = preset;
  return config;
}

std::string to_json(const RunConfig& c) {
  Json j;
  j["preset"] = to_string(c.preset);
  j["sample_rate"] = c.sample_rate;
  j["k"] = c.k;
  j["t_steps"] = c.t_steps;
  j["schedule_offset"] = c.schedule_offset;
  j["lambda"] = c.lambda;
  j["cfg_dropout"] = c.cfg_dropout;
  j["guidance"] = c.guidance;
  j["max_order"] = c.max_order;
  j["seed"] = c.seed;
  j["keep_seconds"] = c.keep_seconds;
  j["edc_floor_db"] = c.edc_floor_db;
  j["conditioner_window_seconds"] = c.conditioner_window_seconds;
  j["rooms"] = c.rooms;
  j["sources"] = c.sources;
  j["receivers"] = c.receivers;
  j["epochs"] = c.epochs;
  j["max_steps"] = c.max_steps;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["clip_norm"] = c.clip_norm;
  j["mix_ratio_a"] = c.mix_ratio_a;
  j["mix_ratio_b"] = c.mix_ratio_b;
  j["dataset_dir"] = c.dataset_dir;
  j["manifest"] = c.manifest;
  j["surrogate_manifest"] = c.surrogate_manifest;
  j["run_dir"] = c.run_dir;
  j["checkpoint"] = c.checkpoint;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

void validate(const RunConfig& c) {
  const auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); };
  if (c.sample_rate <= 0) fail("sample_rate must be positive");
  if (c.k == 0 || c.k % nn::kLengthMultiple != 0) fail("k must be a positive multiple of 128");
  if (c.t_steps < 1) fail("t_steps must be >= 1");
  if (!(c.schedule_offset > 0.0)) fail("schedule_offset must be positive");
  if (!(c.lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(c.cfg_dropout >= 0.0 && c.cfg_dropout <= 1.0)) fail("cfg_dropout must lie in [0, 1]");
  if (!(c.guidance >= 1.0)) fail("guidance must be >= 1");
  if (c.max_order < 0) fail("max_order must be >= 0");
  if (!(c.keep_seconds >= 0.0)) fail("keep_seconds must be >= 0");
  if (!(c.edc_floor_db < 0.0)) fail("edc_floor_db must be negative");
  if (!(c.conditioner_window_seconds >= 0.0)) fail("conditioner_window_seconds must be >= 0");
  if (c.rooms < 1 || c.sources < 1 || c.receivers < 1) fail("room/source/receiver counts must be >= 1");
  if (c.epochs < 1) fail("epochs must be >= 1");
  if (c.max_steps < 0) fail("max_steps must be >= 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (c.mix_ratio_a < 0.0 || c.mix_ratio_b < 0.0 || !(c.mix_ratio_a + c.mix_ratio_b > 0.0)) {
    fail("mix ratios must be non-negative and not both zero");
  }
}

nn::UNetConfig network_config(const RunConfig& config) {
  nn::UNetConfig net = config.preset == Preset::kDesk ? nn::UNetConfig::desk() : nn::UNetConfig::paper();
  net.input_length = config.k;
  return net;
}

}  // namespace rirforge
