#include "rirforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "rirforge/error.hpp"
#include "rirforge/io/wav.hpp"
#include "rirforge/ism.hpp"
#include "rirforge/nn/checkpoint.hpp"
#include "rirforge/parallel.hpp"

namespace rirforge {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kSurrogateStream = 1;
constexpr std::uint64_t kCompleteStream = 2;

void require_path(const std::string& value, const char* what) {
  if (value.empty()) {
    throw Error(ErrorKind::kInvalidConfig, std::string("missing required path: ") + what);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + dir.string() + ": " + ec.message());
}

std::string item_id(int room, int source, int receiver) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "r%03d_s%02d_m%02d", room, source, receiver);
  return buf;
}

// Relative form of `target` as seen from `base_dir`, falling back to the
// absolute path when the two share no root.
std::string relative_to(const fs::path& target, const fs::path& base_dir) {
  const fs::path abs_target = fs::absolute(target).lexically_normal();
  const fs::path rel = abs_target.lexically_relative(fs::absolute(base_dir).lexically_normal());
  return rel.empty() ? abs_target.generic_string() : rel.generic_string();
}

std::vector<ManifestRecord> select(const std::vector<ManifestRecord>& records,
                                   std::optional<Split> split) {
  return split ? filter_split(records, *split) : records;
}

}  // namespace

std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

fs::path cmd_simulate(const RunConfig& config) {
  validate(config);
  require_path(config.dataset_dir, "dataset_dir");
  const fs::path dir(config.dataset_dir);
  make_dirs(dir / "targets");
  make_dirs(dir / "conditioners");

  struct Job {
    std::string id;
    int room_id;
    int source_id;
    int receiver_id;
    Room room;
    SourcePose source;
    ReceiverPose receiver;
  };

  // All random draws happen here, in a fixed order, before any rendering.
  std::mt19937_64 rng(config.seed);
  const SamplingRanges ranges;
  std::vector<Job> jobs;
  for (int r = 0; r < config.rooms; ++r) {
    const Room room = sample_room(ranges, rng);
    std::vector<SourcePose> sources(config.sources);
    for (SourcePose& s : sources) {
      s.position = sample_position(room, ranges.wall_margin, rng, ranges.max_retries);
    }
    std::vector<ReceiverPose> receivers(config.receivers);
    for (ReceiverPose& m : receivers) {
      m.position = sample_position(room, ranges.wall_margin, rng, ranges.max_retries);
    }
    for (int s = 0; s < config.sources; ++s) {
      for (int m = 0; m < config.receivers; ++m) {
        jobs.push_back({item_id(r, s, m), r, s, m, room, sources[s], receivers[m]});
      }
    }
  }
  const std::vector<Split> splits = assign_splits(jobs.size(), rng);

  std::vector<ManifestRecord> records(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    RirPair pair = simulate_pair(job.room, job.source, job.receiver, config.max_order,
                                 config.sample_rate, config.k, config.keep_seconds);
    if (config.conditioner_window_seconds > 0.0) {
      pair.conditioner = truncate_window(pair.conditioner, config.conditioner_window_seconds);
    }
    ManifestRecord& rec = records[i];
    rec.id = job.id;
    rec.target_path = "targets/" + job.id + ".wav";
    rec.conditioner_path = "conditioners/" + job.id + ".wav";
    rec.room_id = job.room_id;
    rec.source_id = job.source_id;
    rec.receiver_id = job.receiver_id;
    rec.max_order = config.max_order;
    rec.split = splits[i];
    rec.source_tag = SourceTag::kIsm;
    write_wav(dir / rec.target_path, pair.target);
    write_wav(dir / rec.conditioner_path, pair.conditioner);
  });

  const fs::path manifest = dir / kManifestName;
  write_manifest(manifest, records);
  write_text(dir / kEffectiveConfigName, to_json(config));
  return manifest;
}

double fit_decay_rate(std::span<const double> samples, int sample_rate, double hi_db,
                      double lo_db, double floor_db) {
  const Edc edc = compute_edc(samples, floor_db);
  double lowest = 0.0;
  for (double v : edc.values_db) {
    if (v > floor_db) lowest = std::min(lowest, v);
  }
  const double lo = std::max(lo_db, lowest);

  double sn = 0.0, sy = 0.0, snn = 0.0, sny = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < edc.values_db.size(); ++n) {
    const double y = edc.values_db[n];
    if (y <= hi_db && y >= lo) {
      const auto x = static_cast<double>(n);
      sn += x;
      sy += y;
      snn += x * x;
      sny += x * y;
      ++count;
    }
  }
  if (count < 2) throw Error(ErrorKind::kInvalidArgument, "too few EDC points to fit a decay");
  const auto c = static_cast<double>(count);
  const double denom = c * snn - sn * sn;
  if (denom == 0.0) throw Error(ErrorKind::kInvalidArgument, "degenerate decay fit");
  const double slope_per_sample = (c * sny - sn * sy) / denom;
  return slope_per_sample * sample_rate;
}

Rir surrogate_tail(const Rir& source, std::size_t junction, std::mt19937_64& rng,
                   std::size_t fade) {
  const std::size_t size = source.size();
  if (junction >= size) throw Error(ErrorKind::kInvalidArgument, "junction beyond the signal");
  const double rate_db = fit_decay_rate(source.samples, source.sample_rate);
  if (!(rate_db < 0.0)) throw Error(ErrorKind::kInvalidArgument, "source does not decay");

  Rir out = source;
  const double per_sample = rate_db / source.sample_rate;  // dB per sample, energy
  const std::vector<double> noise = standard_normal(size - junction, rng);
  double source_energy = 0.0;
  double tail_energy = 0.0;
  fade = std::min(fade, size - junction);
  for (std::size_t n = junction; n < size; ++n) {
    source_energy += source.samples[n] * source.samples[n];
    double v = noise[n - junction] *
               std::pow(10.0, per_sample * static_cast<double>(n - junction) / 20.0);
    const std::size_t from_end = size - 1 - n;
    if (from_end < fade) {
      v *= 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(from_end) /
                                static_cast<double>(fade));
    }
    out.samples[n] = v;
    tail_energy += v * v;
  }
  const double gain = tail_energy > 0.0 ? std::sqrt(source_energy / tail_energy) : 0.0;
  for (std::size_t n = junction; n < size; ++n) out.samples[n] *= gain;
  return out;
}

fs::path cmd_surrogate_tail(const RunConfig& config) {
  validate(config);
  require_path(config.manifest, "manifest");
  require_path(config.output_dir, "output_dir");
  const fs::path manifest_path(config.manifest);
  const fs::path source_dir = manifest_path.parent_path();
  const fs::path out_dir(config.output_dir);
  make_dirs(out_dir / "targets");

  const std::vector<ManifestRecord> source = read_manifest(manifest_path);
  validate_manifest(source, source_dir);
  const double window = config.conditioner_window_seconds > 0.0
                            ? config.conditioner_window_seconds
                            : kConditionerWindowSeconds;

  std::vector<ManifestRecord> records(source.size());
  parallel_for(source.size(), [&](std::size_t i) {
    const ManifestRecord& src = source[i];
    const Rir target = read_wav(resolve(source_dir, src.target_path));
    const std::size_t junction =
        std::max(k80_for(target.sample_rate, window),
                 static_cast<std::size_t>(std::llround(config.keep_seconds * target.sample_rate)));
    std::mt19937_64 rng = item_rng(config.seed, i, kSurrogateStream);
    const Rir surrogate = surrogate_tail(target, std::min(junction, target.size() - 1), rng);

    ManifestRecord& rec = records[i];
    rec = src;
    rec.id = src.id + "_sur";
    rec.target_path = "targets/" + rec.id + ".wav";
    rec.conditioner_path = relative_to(resolve(source_dir, src.conditioner_path), out_dir);
    rec.source_tag = SourceTag::kSurrogate;
    write_wav(out_dir / rec.target_path, surrogate);
  });

  const fs::path manifest = out_dir / kManifestName;
  write_manifest(manifest, records);
  write_text(out_dir / kEffectiveConfigName, to_json(config));
  return manifest;
}

std::vector<TrainingPair> load_pairs(const std::vector<ManifestRecord>& records,
                                     const fs::path& base_dir, std::size_t k, int sample_rate) {
  std::vector<TrainingPair> pairs(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const ManifestRecord& rec = records[i];
    const Rir target = read_wav(resolve(base_dir, rec.target_path));
    const Rir conditioner = read_wav(resolve(base_dir, rec.conditioner_path));
    for (const Rir* r : {&target, &conditioner}) {
      if (r->size() != k || r->sample_rate != sample_rate) {
        throw Error(ErrorKind::kShapeMismatch,
                    "record '" + rec.id + "' does not match K = " + std::to_string(k) +
                        " at " + std::to_string(sample_rate) + " Hz");
      }
    }
    pairs[i] = TrainingPair{rec.id, target.samples, conditioner.samples};
  });
  return pairs;
}

TrainResult cmd_train(const RunConfig& config) {
  validate(config);
  require_path(config.manifest, "manifest");
  require_path(config.run_dir, "run_dir");
  const fs::path run_dir(config.run_dir);
  make_dirs(run_dir);

  const fs::path manifest_path(config.manifest);
  const fs::path base_dir = manifest_path.parent_path();
  std::vector<ManifestRecord> records = read_manifest(manifest_path);
  validate_manifest(records, base_dir);
  // Surrogate records are rewritten to paths relative to the primary manifest
  // so a single base directory serves the mixed list.
  if (!config.surrogate_manifest.empty()) {
    const fs::path sur_path(config.surrogate_manifest);
    std::vector<ManifestRecord> surrogate = read_manifest(sur_path);
    validate_manifest(surrogate, sur_path.parent_path());
    for (ManifestRecord& rec : surrogate) {
      rec.target_path = relative_to(resolve(sur_path.parent_path(), rec.target_path), base_dir);
      rec.conditioner_path =
          relative_to(resolve(sur_path.parent_path(), rec.conditioner_path), base_dir);
    }
    std::mt19937_64 mix_rng(config.seed);
    std::vector<ManifestRecord> mixed;
    for (Split split : {Split::kTrain, Split::kValid, Split::kTest}) {
      for (ManifestRecord& rec :
           mix_datasets(filter_split(records, split), filter_split(surrogate, split),
                        config.mix_ratio_a, config.mix_ratio_b, mix_rng)) {
        mixed.push_back(std::move(rec));
      }
    }
    records = std::move(mixed);
    write_manifest(run_dir / "mixed_manifest.jsonl", records);
  }

  const std::vector<TrainingPair> train_items =
      load_pairs(filter_split(records, Split::kTrain), base_dir, config.k, config.sample_rate);
  const std::vector<TrainingPair> valid_items =
      load_pairs(filter_split(records, Split::kValid), base_dir, config.k, config.sample_rate);

  TrainOptions options;
  options.net = network_config(config);
  options.diffusion_steps = config.t_steps;
  options.schedule_offset = config.schedule_offset;
  options.loss = LossConfig{config.lambda, config.edc_floor_db, config.cfg_dropout};
  options.adam.learning_rate = config.learning_rate;
  options.adam.clip_norm = config.clip_norm;
  options.batch_size = config.batch_size;
  options.epochs = config.epochs;
  options.max_steps = config.max_steps;
  options.seed = config.seed;
  options.checkpoint_path = run_dir / kCheckpointName;
  options.log_path = run_dir / kTrainLogName;
  nlohmann::ordered_json meta;
  meta["sample_rate"] = config.sample_rate;
  meta["max_order"] = config.max_order;
  options.metadata_json = meta.dump();

  write_text(run_dir / kEffectiveConfigName, to_json(config));
  return train(options, train_items, valid_items);
}

std::vector<fs::path> cmd_complete(const RunConfig& config, const fs::path& input,
                                   std::optional<Split> split) {
  validate(config);
  require_path(config.checkpoint, "checkpoint");
  require_path(config.output_dir, "output_dir");
  const fs::path out_dir(config.output_dir);
  make_dirs(out_dir);

  const nn::Checkpoint ckpt = nn::load_checkpoint(config.checkpoint);
  const auto meta = nlohmann::json::parse(ckpt.metadata_json);
  const int steps = meta.value("diffusion_steps", config.t_steps);
  const double offset = meta.value("schedule_offset", config.schedule_offset);
  const int sample_rate = meta.value("sample_rate", config.sample_rate);
  const std::size_t k = ckpt.config.input_length;
  const Schedule sched = cosine_schedule(steps, offset);
  const nn::UNet net(ckpt.config);
  const Denoiser denoiser = make_denoiser(net, ckpt.params);

  struct Item {
    std::string id;
    fs::path conditioner;
  };
  std::vector<Item> items;
  if (input.extension() == ".wav") {
    items.push_back({input.stem().string(), input});
  } else {
    const std::vector<ManifestRecord> records = select(read_manifest(input), split);
    validate_manifest(records, input.parent_path());
    for (const ManifestRecord& rec : records) {
      items.push_back({rec.id, resolve(input.parent_path(), rec.conditioner_path)});
    }
  }

  std::vector<fs::path> outputs(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const Rir conditioner = fit_length(read_wav(items[i].conditioner), k);
    std::mt19937_64 rng = item_rng(config.seed, i, kCompleteStream);
    const std::vector<double> completed =
        sample(denoiser, conditioner.samples, sched, config.guidance, rng);
    outputs[i] = out_dir / (items[i].id + ".wav");
    write_wav(outputs[i], completed, sample_rate);
  });
  return outputs;
}

MetricReport cmd_evaluate(const fs::path& predictions_dir, const fs::path& manifest_path,
                          std::size_t k80, const fs::path& out_dir, std::optional<Split> split,
                          double floor_db) {
  const std::vector<ManifestRecord> records = select(read_manifest(manifest_path), split);
  const fs::path base_dir = manifest_path.parent_path();
  std::vector<ItemMetrics> items(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    const ManifestRecord& rec = records[i];
    const Rir prediction = read_wav(predictions_dir / (rec.id + ".wav"));
    const Rir target = read_wav(resolve(base_dir, rec.target_path));
    const Rir conditioner = read_wav(resolve(base_dir, rec.conditioner_path));
    items[i] = evaluate_item(rec.id, prediction.samples, target.samples, conditioner.samples,
                             k80, floor_db);
  });
  MetricReport report = build_report(std::move(items));
  make_dirs(out_dir);
  write_text(out_dir / "metrics.json", report_json(report));
  write_text(out_dir / "metrics.csv", report_csv(report));
  return report;
}

void cmd_plot_data(const std::vector<fs::path>& wavs, const fs::path& out_csv, double floor_db) {
  std::ostringstream out;
  out << std::setprecision(9);
  out << "file,sample,time_s,amplitude,edc_db\n";
  for (const fs::path& path : wavs) {
    const Rir rir = read_wav(path);
    const Edc edc = compute_edc(rir, floor_db);
    const std::string name = path.filename().string();
    for (std::size_t n = 0; n < rir.size(); ++n) {
      out << name << ',' << n << ',' << static_cast<double>(n) / rir.sample_rate << ','
          << rir.samples[n] << ',' << edc.values_db[n] << '\n';
    }
  }
  if (out_csv.has_parent_path()) make_dirs(out_csv.parent_path());
  write_text(out_csv, out.str());
}

}  // namespace rirforge
