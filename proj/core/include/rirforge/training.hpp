#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rirforge/diffusion.hpp"
#include "rirforge/io/manifest.hpp"
#include "rirforge/losses.hpp"
#include "rirforge/nn/optimizer.hpp"
#include "rirforge/nn/unet.hpp"

namespace rirforge {

struct TrainingPair {
  std::string id;
  std::vector<double> target;       // x0, preprocessed to length K
  std::vector<double> conditioner;  // c, same length
};

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& rng);

// One Bernoulli(p) draw per item. p = 0 never drops and p = 1 always does.
std::vector<bool> draw_cfg_drops(std::size_t count, double p, std::mt19937_64& rng);

// Uniform integer in [1, steps].
int draw_timestep(int steps, std::mt19937_64& rng);

// Network inputs for one batch. Draw order per batch: all drop flags, then
// per item its timestep followed by its noise.
struct PreparedBatch {
  std::vector<bool> dropped;
  std::vector<int> steps;
  std::vector<std::vector<double>> conditioners;  // zeros where dropped
  std::vector<std::vector<double>> noisy;         // x_t
};

PreparedBatch prepare_batch(std::span<const TrainingPair> batch, const Schedule& sched,
                            double cfg_dropout, std::mt19937_64& rng);

struct StepResult {
  nn::Gradients grads;  // averaged over the batch
  LossTerms loss;       // batch means
};

struct ItemLoss {
  LossTerms terms;
  std::vector<double> grad;  // d total / d prediction
};

// Loss terms and gradient with respect to the prediction for one item.
ItemLoss item_loss(std::span<const double> prediction, std::span<const double> target,
                   const LossConfig& config);

// Forward and backward over one batch. Items run on separate graphs, possibly
// in parallel; gradients are reduced in item order. Throws kNonFiniteLoss.
StepResult train_step(const nn::UNet& net, const nn::ParameterSet& params,
                      std::span<const TrainingPair> batch, const Schedule& sched,
                      const LossConfig& config, std::mt19937_64& rng);

// Mean loss terms without gradients, using the same input preparation as
// training.
LossTerms evaluate_loss(const nn::UNet& net, const nn::ParameterSet& params,
                        std::span<const TrainingPair> items, const Schedule& sched,
                        const LossConfig& config, std::mt19937_64& rng,
                        std::size_t batch_size = 8);

// Picks item i from a[i] with probability ratio_a / (ratio_a + ratio_b), else
// from b[i]. With one ratio zero only the other list is needed; otherwise the
// result has min(|a|, |b|) items.
std::vector<ManifestRecord> mix_datasets(const std::vector<ManifestRecord>& a,
                                         const std::vector<ManifestRecord>& b, double ratio_a,
                                         double ratio_b, std::mt19937_64& rng);

struct TrainOptions {
  nn::UNetConfig net = nn::UNetConfig::desk();
  int diffusion_steps = 100;
  double schedule_offset = kDefaultScheduleOffset;
  LossConfig loss;
  nn::AdamConfig adam;
  std::size_t batch_size = 4;
  int epochs = 1;
  std::int64_t max_steps = 0;  // 0: no limit
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_path;  // best-validation weights; empty skips
  std::filesystem::path log_path;         // JSONL; empty skips
  std::int64_t log_every_steps = 0;       // extra step records; 0 disables
  std::string metadata_json = "{}";       // merged into the checkpoint metadata
};

struct LogRecord {
  std::string kind;  // "step" or "epoch"
  int epoch = 0;
  std::int64_t step = 0;
  LossTerms train;
  std::optional<LossTerms> valid;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;
};

std::string to_json_line(const LogRecord& record);

struct TrainResult {
  nn::ParameterSet params;       // after the last step
  nn::ParameterSet best_params;  // lowest validation total; last if no validation
  nn::AdamState optimizer;
  std::vector<LogRecord> log;
  std::int64_t steps = 0;
  double best_valid_total = 0.0;
};

using StepCallback = std::function<void(const LogRecord&)>;

// Epoch loop over shuffled batches. Starts from `init` when given, else from a
// seeded initialization.
TrainResult train(const TrainOptions& options, const std::vector<TrainingPair>& train_items,
                  const std::vector<TrainingPair>& valid_items,
                  const nn::ParameterSet* init = nullptr,
                  const StepCallback& on_record = {});

// Adapts a network and weights to the sampler's denoiser interface.
Denoiser make_denoiser(const nn::UNet& net, const nn::ParameterSet& params);

}  // namespace rirforge
