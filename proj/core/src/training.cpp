#include "rirforge/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rirforge/error.hpp"
#include "rirforge/nn/checkpoint.hpp"
#include "rirforge/nn/ops.hpp"
#include "rirforge/parallel.hpp"

namespace rirforge {
namespace {

constexpr std::uint64_t kValidationSeedSalt = 0x9e3779b97f4a7c15ULL;

void require_pairs(std::span<const TrainingPair> items) {
  if (items.empty()) throw Error(ErrorKind::kInvalidArgument, "empty batch");
  const std::size_t length = items.front().target.size();
  for (const TrainingPair& item : items) {
    if (item.target.size() != length || item.conditioner.size() != length) {
      throw Error(ErrorKind::kShapeMismatch, "item '" + item.id + "' has inconsistent length");
    }
  }
}

void add_terms(LossTerms& acc, const LossTerms& t, double scale) {
  acc.mse += scale * t.mse;
  acc.edc += scale * t.edc;
  acc.total += scale * t.total;
}

nlohmann::ordered_json terms_json(const LossTerms& t) {
  nlohmann::ordered_json j;
  j["mse"] = t.mse;
  j["edc"] = t.edc;
  j["total"] = t.total;
  return j;
}

}  // namespace

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<bool> draw_cfg_drops(std::size_t count, double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::kInvalidConfig, "cfg dropout must lie in [0, 1]");
  }
  std::vector<bool> drops(count);
  for (std::size_t i = 0; i < count; ++i) drops[i] = uniform01(rng) < p;
  return drops;
}

int draw_timestep(int steps, std::mt19937_64& rng) {
  if (steps < 1) throw Error(ErrorKind::kInvalidSchedule, "schedule has no steps");
  std::uniform_int_distribution<int> dist(1, steps);
  return dist(rng);
}

PreparedBatch prepare_batch(std::span<const TrainingPair> batch, const Schedule& sched,
                            double cfg_dropout, std::mt19937_64& rng) {
  require_pairs(batch);
  PreparedBatch out;
  out.dropped = draw_cfg_drops(batch.size(), cfg_dropout, rng);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TrainingPair& item = batch[i];
    const int t = draw_timestep(sched.steps, rng);
    const std::vector<double> eps = standard_normal(item.target.size(), rng);
    out.steps.push_back(t);
    out.noisy.push_back(forward_diffuse(item.target, t, eps, sched));
    out.conditioners.push_back(out.dropped[i] ? std::vector<double>(item.conditioner.size(), 0.0)
                                              : item.conditioner);
  }
  return out;
}

ItemLoss item_loss(std::span<const double> prediction, std::span<const double> target,
                   const LossConfig& config) {
  ItemLoss out;
  LossGradient mse = mse_loss_gradient(prediction, target);
  out.terms.mse = mse.value;
  out.grad = std::move(mse.grad);
  if (config.lambda != 0.0) {
    const LossGradient edc = edc_loss_gradient(prediction, target, config.edc_floor_db);
    out.terms.edc = edc.value;
    for (std::size_t n = 0; n < out.grad.size(); ++n) out.grad[n] += config.lambda * edc.grad[n];
  }
  out.terms.total = out.terms.mse + config.lambda * out.terms.edc;
  return out;
}

StepResult train_step(const nn::UNet& net, const nn::ParameterSet& params,
                      std::span<const TrainingPair> batch, const Schedule& sched,
                      const LossConfig& config, std::mt19937_64& rng) {
  validate(config);
  const PreparedBatch prepared = prepare_batch(batch, sched, config.cfg_dropout, rng);
  const std::size_t count = batch.size();
  std::vector<nn::Gradients> grads(count);
  std::vector<LossTerms> terms(count);

  parallel_for(count, [&](std::size_t i) {
    nn::Graph g(&params);
    const nn::NodeId x = g.constant(nn::signal_tensor(prepared.noisy[i]));
    const nn::NodeId c = g.constant(nn::signal_tensor(prepared.conditioners[i]));
    const int t = prepared.steps[i];
    const nn::NodeId pred = net.forward(g, x, c, std::span<const int>(&t, 1));
    const nn::NodeId loss = nn::custom_loss(g, pred, [&](const nn::Tensor& p) {
      ItemLoss l = item_loss(p.view(), batch[i].target, config);
      if (!std::isfinite(l.terms.total)) {
        std::ostringstream msg;
        msg << "non-finite loss on item '" << batch[i].id << "' (t = " << t
            << ", conditioner dropped = " << prepared.dropped[i] << ", mse = " << l.terms.mse
            << ", edc = " << l.terms.edc << ")";
        throw Error(ErrorKind::kNonFiniteLoss, msg.str());
      }
      terms[i] = l.terms;
      return nn::LossValue{l.terms.total, nn::Tensor(p.shape, std::move(l.grad))};
    });
    grads[i] = g.backward(loss);
  });

  StepResult result;
  result.grads = params.zeros_like();
  const double scale = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < count; ++i) {
    nn::accumulate(result.grads, grads[i], scale);
    add_terms(result.loss, terms[i], scale);
  }
  return result;
}

LossTerms evaluate_loss(const nn::UNet& net, const nn::ParameterSet& params,
                        std::span<const TrainingPair> items, const Schedule& sched,
                        const LossConfig& config, std::mt19937_64& rng,
                        std::size_t batch_size) {
  require_pairs(items);
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::vector<LossTerms> terms(items.size());
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const auto batch = items.subspan(start, std::min(batch_size, items.size() - start));
    const PreparedBatch prepared = prepare_batch(batch, sched, config.cfg_dropout, rng);
    parallel_for(batch.size(), [&](std::size_t i) {
      const int t = prepared.steps[i];
      const nn::Tensor pred =
          net.predict(params, nn::signal_tensor(prepared.noisy[i]),
                      nn::signal_tensor(prepared.conditioners[i]), std::span<const int>(&t, 1));
      terms[start + i] = loss_terms(pred.view(), batch[i].target, config);
    });
  }
  LossTerms mean;
  for (const LossTerms& t : terms) add_terms(mean, t, 1.0 / static_cast<double>(items.size()));
  return mean;
}

std::vector<ManifestRecord> mix_datasets(const std::vector<ManifestRecord>& a,
                                         const std::vector<ManifestRecord>& b, double ratio_a,
                                         double ratio_b, std::mt19937_64& rng) {
  if (ratio_a < 0.0 || ratio_b < 0.0 || !(ratio_a + ratio_b > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mixing ratios must be non-negative, not both 0");
  }
  if (ratio_b == 0.0) return a;
  if (ratio_a == 0.0) return b;
  const double p_a = ratio_a / (ratio_a + ratio_b);
  const std::size_t count = std::min(a.size(), b.size());
  std::vector<ManifestRecord> mixed;
  mixed.reserve(count);
  for (std::size_t i = 0; i < count; ++i) mixed.push_back(uniform01(rng) < p_a ? a[i] : b[i]);
  return mixed;
}

std::string to_json_line(const LogRecord& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["mse"] = r.train.mse;
  j["edc"] = r.train.edc;
  j["total"] = r.train.total;
  if (r.valid) j["valid"] = terms_json(*r.valid);
  j["lr"] = r.learning_rate;
  j["seed"] = r.seed;
  return j.dump();
}

TrainResult train(const TrainOptions& options, const std::vector<TrainingPair>& train_items,
                  const std::vector<TrainingPair>& valid_items, const nn::ParameterSet* init,
                  const StepCallback& on_record) {
  validate(options.loss);
  if (train_items.empty()) throw Error(ErrorKind::kInvalidArgument, "no training items");
  if (options.batch_size == 0 || options.epochs < 1) {
    throw Error(ErrorKind::kInvalidConfig, "batch size and epochs must be positive");
  }
  require_pairs(train_items);
  if (!valid_items.empty()) require_pairs(valid_items);
  if (train_items.front().target.size() != options.net.input_length) {
    throw Error(ErrorKind::kShapeMismatch, "item length differs from the network input length");
  }

  const nn::UNet net(options.net);
  const Schedule sched = cosine_schedule(options.diffusion_steps, options.schedule_offset);
  std::mt19937_64 rng(options.seed);

  TrainResult result;
  result.params = init != nullptr ? *init : net.init_params(rng);
  result.optimizer = nn::make_adam_state(result.params);
  result.best_params = result.params;
  result.best_valid_total = std::numeric_limits<double>::infinity();

  std::ofstream log;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw Error(ErrorKind::kIoError, "cannot write " + options.log_path.string());
  }
  const auto emit = [&](LogRecord record) {
    if (log.is_open()) log << to_json_line(record) << '\n' << std::flush;
    if (on_record) on_record(record);
    result.log.push_back(std::move(record));
  };

  const auto save = [&](const nn::ParameterSet& params, int epoch) {
    if (options.checkpoint_path.empty()) return;
    nlohmann::ordered_json meta = nlohmann::ordered_json::parse(options.metadata_json);
    meta["diffusion_steps"] = options.diffusion_steps;
    meta["schedule_offset"] = options.schedule_offset;
    meta["lambda"] = options.loss.lambda;
    meta["cfg_dropout"] = options.loss.cfg_dropout;
    meta["seed"] = options.seed;
    meta["epoch"] = epoch;
    meta["step"] = result.steps;
    nn::Checkpoint ckpt{options.net, params, result.optimizer, meta.dump()};
    nn::save_checkpoint(options.checkpoint_path, ckpt);
  };

  std::vector<std::size_t> order(train_items.size());
  std::iota(order.begin(), order.end(), 0);
  bool done = false;
  for (int epoch = 1; epoch <= options.epochs && !done; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossTerms epoch_terms;
    std::size_t epoch_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      std::vector<TrainingPair> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + options.batch_size); ++i) {
        batch.push_back(train_items[order[i]]);
      }
      StepResult step = train_step(net, result.params, batch, sched, options.loss, rng);
      nn::adam_step(result.params, std::move(step.grads), result.optimizer, options.adam);
      ++result.steps;
      ++epoch_batches;
      add_terms(epoch_terms, step.loss, 1.0);

      if (options.log_every_steps > 0 && result.steps % options.log_every_steps == 0) {
        emit(LogRecord{"step", epoch, result.steps, step.loss, std::nullopt,
                       options.adam.learning_rate, options.seed});
      }
      if (options.max_steps > 0 && result.steps >= options.max_steps) {
        done = true;
        break;
      }
    }
    const double inv = 1.0 / static_cast<double>(epoch_batches);
    LossTerms mean{epoch_terms.mse * inv, epoch_terms.edc * inv, epoch_terms.total * inv};

    LogRecord record{"epoch", epoch, result.steps, mean, std::nullopt,
                     options.adam.learning_rate, options.seed};
    if (!valid_items.empty()) {
      std::mt19937_64 valid_rng(options.seed ^ kValidationSeedSalt);
      record.valid = evaluate_loss(net, result.params, valid_items, sched, options.loss,
                                   valid_rng, options.batch_size);
      if (record.valid->total < result.best_valid_total) {
        result.best_valid_total = record.valid->total;
        result.best_params = result.params;
        save(result.best_params, epoch);
      }
    } else {
      result.best_params = result.params;
      save(result.best_params, epoch);
    }
    emit(std::move(record));
  }
  return result;
}

Denoiser make_denoiser(const nn::UNet& net, const nn::ParameterSet& params) {
  return [&net, &params](std::span<const double> x_t, std::span<const double> c, int t) {
    return net.predict(params, nn::signal_tensor(x_t), nn::signal_tensor(c),
                       std::span<const int>(&t, 1))
        .data;
  };
}

}  // namespace rirforge
