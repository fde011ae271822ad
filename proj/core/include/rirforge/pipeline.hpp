#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rirforge/io/manifest.hpp"
#include "rirforge/io/run_config.hpp"
#include "rirforge/metrics.hpp"
#include "rirforge/signal.hpp"
#include "rirforge/training.hpp"

namespace rirforge {

inline constexpr char kManifestName[] = "manifest.jsonl";
inline constexpr char kCheckpointName[] = "checkpoint.bin";
inline constexpr char kTrainLogName[] = "train_log.jsonl";
inline constexpr char kEffectiveConfigName[] = "effective_config.json";

// Samples rooms and poses, renders full targets and order-limited
// conditioners, and writes WAVs plus a manifest under config.dataset_dir.
// Returns the manifest path.
std::filesystem::path cmd_simulate(const RunConfig& config);

// Decay rate in dB per second from a least-squares line through the EDC
// between hi_db and lo_db. If the EDC never reaches lo_db the lowest level
// above the floor is used instead. Throws kInvalidArgument with fewer than
// two points in range.
double fit_decay_rate(std::span<const double> samples, int sample_rate, double hi_db = -5.0,
                      double lo_db = -25.0, double floor_db = kDefaultEdcFloorDb);

// Non-physical stand-in for a wave-simulated target: the source's samples up
// to `junction`, then Gaussian noise under an exponential envelope with the
// source's fitted decay rate. The tail carries the same energy as the
// source's tail and fades to zero over the last `fade` samples.
Rir surrogate_tail(const Rir& source, std::size_t junction, std::mt19937_64& rng,
                   std::size_t fade = 64);

// Writes a surrogate variant of every record in config.manifest to
// config.output_dir, sharing the source conditioners. Returns the manifest path.
std::filesystem::path cmd_surrogate_tail(const RunConfig& config);

// Loads the records' WAVs as training pairs. Throws kShapeMismatch unless
// every file has K samples at the configured rate.
std::vector<TrainingPair> load_pairs(const std::vector<ManifestRecord>& records,
                                     const std::filesystem::path& base_dir, std::size_t k,
                                     int sample_rate);

// Trains on config.manifest (mixed with config.surrogate_manifest when set)
// and writes checkpoint, log and effective config under config.run_dir.
TrainResult cmd_train(const RunConfig& config);

// Completes one conditioner WAV or every record of a manifest with the
// checkpoint in config.checkpoint. Writes <id>.wav into config.output_dir and
// returns the written paths in input order.
std::vector<std::filesystem::path> cmd_complete(const RunConfig& config,
                                                const std::filesystem::path& input,
                                                std::optional<Split> split = std::nullopt);

// Scores <predictions_dir>/<id>.wav against each record's target and writes
// metrics.json and metrics.csv into out_dir.
MetricReport cmd_evaluate(const std::filesystem::path& predictions_dir,
                          const std::filesystem::path& manifest_path, std::size_t k80,
                          const std::filesystem::path& out_dir,
                          std::optional<Split> split = std::nullopt,
                          double floor_db = kDefaultEdcFloorDb);

// One CSV row per sample and input: file, sample, time_s, amplitude, edc_db.
void cmd_plot_data(const std::vector<std::filesystem::path>& wavs,
                   const std::filesystem::path& out_csv, double floor_db = kDefaultEdcFloorDb);

// Deterministic per-item generator derived from a run seed and an index.
std::mt19937_64 item_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

}  // namespace rirforge
