// rirforge: dataset synthesis, training, completion and evaluation.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rirforge/error.hpp"
#include "rirforge/io/run_config.hpp"
#include "rirforge/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using rirforge::RunConfig;

// Flags shared by every subcommand. Only flags given on the command line
// override the config file.
struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::vector<std::function<void(RunConfig&)>> overrides;

  template <typename T>
  CLI::Option* bind(CLI::App* app, const std::string& name, const std::string& help,
                    T RunConfig::*field) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    overrides.push_back([opt, value, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *value;
    });
    return opt;
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--preset", preset, "network and scale preset")
        ->check(CLI::IsMember({"paper", "desk"}));
    bind(app, "--seed", "random seed", &RunConfig::seed);
    bind(app, "--order", "maximum ISM reflection order of the conditioner", &RunConfig::max_order)
        ->check(CLI::NonNegativeNumber);
    bind(app, "--guidance", "classifier-free guidance scale s (>= 1)", &RunConfig::guidance);
    bind(app, "--lambda", "EDC loss weight", &RunConfig::lambda);
    bind(app, "--cfg-dropout", "conditioner dropout probability", &RunConfig::cfg_dropout);
    bind(app, "--k", "RIR length in samples (multiple of 128)", &RunConfig::k);
    bind(app, "--sample-rate", "sample rate in Hz", &RunConfig::sample_rate);
    bind(app, "--t-steps", "diffusion steps T", &RunConfig::t_steps);
  }

  RunConfig resolve() const {
    RunConfig config = rirforge::load_run_config(config_path, preset);
    for (const auto& apply : overrides) apply(config);
    rirforge::validate(config);
    return config;
  }
};

std::optional<rirforge::Split> parse_split_flag(const std::string& text) {
  if (text == "all") return std::nullopt;
  return rirforge::parse_split(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rirforge: diffusion-based RIR completion from low-order ISM conditioners"};
  app.require_subcommand(1);

  // simulate
  CommonFlags sim_flags;
  CLI::App* sim = app.add_subcommand("simulate", "synthesize an ISM conditioner/target dataset");
  sim_flags.attach(sim);
  sim_flags.bind(sim, "--out", "dataset directory", &RunConfig::dataset_dir);
  sim_flags.bind(sim, "--rooms", "number of rooms", &RunConfig::rooms);
  sim_flags.bind(sim, "--sources", "sources per room", &RunConfig::sources);
  sim_flags.bind(sim, "--receivers", "receivers per room", &RunConfig::receivers);
  sim_flags.bind(sim, "--window", "conditioner length in seconds (0 keeps all)",
                 &RunConfig::conditioner_window_seconds);

  // surrogate-tail
  CommonFlags sur_flags;
  CLI::App* sur = app.add_subcommand(
      "surrogate-tail", "derive non-physical noise-tail targets from an ISM dataset");
  sur_flags.attach(sur);
  sur_flags.bind(sur, "--manifest", "source ISM manifest", &RunConfig::manifest);
  sur_flags.bind(sur, "--out", "output directory", &RunConfig::output_dir);

  // train
  CommonFlags train_flags;
  std::string mix_ratio;
  CLI::App* trn = app.add_subcommand("train", "train the denoiser");
  train_flags.attach(trn);
  train_flags.bind(trn, "--manifest", "training manifest", &RunConfig::manifest);
  train_flags.bind(trn, "--surrogate-manifest", "second dataset to mix in",
                   &RunConfig::surrogate_manifest);
  train_flags.bind(trn, "--run-dir", "output directory for checkpoint and log",
                   &RunConfig::run_dir);
  train_flags.bind(trn, "--epochs", "training epochs", &RunConfig::epochs);
  train_flags.bind(trn, "--max-steps", "stop after this many steps (0: no limit)",
                   &RunConfig::max_steps);
  train_flags.bind(trn, "--batch-size", "items per step", &RunConfig::batch_size);
  train_flags.bind(trn, "--lr", "learning rate", &RunConfig::learning_rate);
  trn->add_option("--mix-ratio", mix_ratio, "mixing ratio A:B, e.g. 8:2");

  // complete
  CommonFlags comp_flags;
  std::string comp_input;
  std::string comp_split = "all";
  CLI::App* comp = app.add_subcommand("complete", "complete conditioners into full RIRs");
  comp_flags.attach(comp);
  comp_flags.bind(comp, "--checkpoint", "trained checkpoint", &RunConfig::checkpoint);
  comp_flags.bind(comp, "--out", "output directory", &RunConfig::output_dir);
  comp->add_option("--input", comp_input, "conditioner WAV or manifest")->required();
  comp->add_option("--split", comp_split, "manifest split to complete")
      ->check(CLI::IsMember({"all", "train", "valid", "test"}));

  // evaluate
  std::string eval_predictions;
  std::string eval_manifest;
  std::string eval_out = ".";
  std::string eval_split = "all";
  int eval_rate = 16000;
  std::size_t eval_k80 = 0;
  double eval_floor = rirforge::kDefaultEdcFloorDb;
  CLI::App* eval = app.add_subcommand("evaluate", "score completed RIRs against targets");
  eval->add_option("--predictions", eval_predictions, "directory of <id>.wav predictions")
      ->required();
  eval->add_option("--manifest", eval_manifest, "manifest with targets")->required();
  eval->add_option("--out", eval_out, "report directory");
  eval->add_option("--split", eval_split, "manifest split to score")
      ->check(CLI::IsMember({"all", "train", "valid", "test"}));
  eval->add_option("--sample-rate", eval_rate, "sample rate used to derive K80");
  eval->add_option("--k80", eval_k80, "override K80 in samples");
  eval->add_option("--edc-floor", eval_floor, "EDC floor in dB");

  // plot-data
  std::vector<std::string> plot_inputs;
  std::string plot_out = "plot_data.csv";
  double plot_floor = rirforge::kDefaultEdcFloorDb;
  CLI::App* plot = app.add_subcommand("plot-data", "export waveform and EDC columns as CSV");
  plot->add_option("wavs", plot_inputs, "RIR WAV files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "CSV path");
  plot->add_option("--edc-floor", plot_floor, "EDC floor in dB");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const fs::path manifest = rirforge::cmd_simulate(sim_flags.resolve());
      std::cout << "wrote " << manifest.string() << '\n';
    } else if (sur->parsed()) {
      const fs::path manifest = rirforge::cmd_surrogate_tail(sur_flags.resolve());
      std::cout << "wrote " << manifest.string() << '\n';
    } else if (trn->parsed()) {
      RunConfig config = train_flags.resolve();
      if (!mix_ratio.empty()) {
        const auto colon = mix_ratio.find(':');
        if (colon == std::string::npos) {
          throw rirforge::Error(rirforge::ErrorKind::kInvalidConfig, "mix ratio must be A:B");
        }
        config.mix_ratio_a = std::stod(mix_ratio.substr(0, colon));
        config.mix_ratio_b = std::stod(mix_ratio.substr(colon + 1));
        rirforge::validate(config);
      }
      const rirforge::TrainResult result = rirforge::cmd_train(config);
      std::cout << "trained " << result.steps << " steps; checkpoint in " << config.run_dir
                << '\n';
    } else if (comp->parsed()) {
      const auto outputs =
          rirforge::cmd_complete(comp_flags.resolve(), comp_input, parse_split_flag(comp_split));
      std::cout << "wrote " << outputs.size() << " completed RIR(s)\n";
    } else if (eval->parsed()) {
      const std::size_t k80 = eval_k80 > 0 ? eval_k80 : rirforge::k80_for(eval_rate);
      const rirforge::MetricReport report =
          rirforge::cmd_evaluate(eval_predictions, eval_manifest, k80, eval_out,
                                 parse_split_flag(eval_split), eval_floor);
      std::printf("items %zu | RER<=80 %.3f (%.3f) dB [%zu excluded] | RMSE>80 %.3f (%.3f) dB"
                  " | EDC MAE %.3f (%.3f) dB\n",
                  report.items.size(), report.rer_early_db.mean, report.rer_early_db.std,
                  report.rer_early_db.excluded, report.rmse_late_db.mean,
                  report.rmse_late_db.std, report.edc_mae_db.mean, report.edc_mae_db.std);
    } else if (plot->parsed()) {
      std::vector<fs::path> paths(plot_inputs.begin(), plot_inputs.end());
      rirforge::cmd_plot_data(paths, plot_out, plot_floor);
      std::cout << "wrote " << plot_out << '\n';
    }
  } catch (const rirforge::Error& e) {
    std::cerr << "rirforge: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rirforge: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
