#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rirforge/nn/graph.hpp"
#include "rirforge/nn/tensor.hpp"

namespace rirforge::nn {

inline constexpr int kDownsampleStages = 7;
inline constexpr std::size_t kLengthMultiple = std::size_t{1} << kDownsampleStages;
inline constexpr std::array<int, 6> kBottleneckDilations{1, 2, 4, 8, 16, 32};

struct UNetConfig {
  std::size_t input_length = 24576;
  int base_channels = 32;
  std::array<int, kDownsampleStages> channel_multipliers{1, 1, 2, 2, 4, 4, 8};
  int max_channels = 256;
  std::array<int, 6> bottleneck_dilations = kBottleneckDilations;
  int time_embed_dim = 128;
  int norm_groups = 8;

  static UNetConfig paper();
  static UNetConfig desk();

  // Channel width of encoder stage i (0..6).
  int stage_channels(int stage) const;

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

// Throws kInvalidConfig.
void validate(const UNetConfig& config);

std::string to_json(const UNetConfig& config);
UNetConfig config_from_json(const std::string& text);
// FNV-1a over the canonical JSON form.
std::uint64_t config_hash(const UNetConfig& config);

// Sinusoidal features (sin, cos) interleaved at frequencies 10000^(-i/(dim/2)).
std::vector<double> time_embedding(int t, int dim);

// Groups used for a normalization layer over `channels` channels.
int norm_groups_for(int channels, int max_groups);

struct ForwardTrace {
  std::size_t bottleneck_length = 0;
  std::vector<std::size_t> encoder_lengths;
};

// The x-prediction denoiser. Holds only the architecture; weights live in a
// ParameterSet so that forwards with shared read-only weights are safe to run
// concurrently.
class UNet {
 public:
  explicit UNet(UNetConfig config);

  const UNetConfig& config() const noexcept { return config_; }

  // Deterministic under a fixed rng state: fan-in scaled normal weights, zero
  // biases, unit normalization gains.
  ParameterSet init_params(std::mt19937_64& rng) const;

  // Shapes in declaration order. Matches init_params exactly.
  const std::vector<std::string>& param_names() const noexcept { return names_; }
  const std::vector<std::vector<std::size_t>>& param_shapes() const noexcept {
    return shapes_;
  }
  std::size_t parameter_count() const;

  // x_t, conditioner: (B, 1, K) nodes; steps: one diffusion step per item.
  // Returns the (B, 1, K) prediction of x0. Throws kLengthNotDivisible or
  // kShapeMismatch.
  NodeId forward(Graph& g, NodeId x_t, NodeId conditioner, std::span<const int> steps,
                 ForwardTrace* trace = nullptr) const;

  // Non-recording convenience wrapper.
  Tensor predict(const ParameterSet& params, const Tensor& x_t, const Tensor& conditioner,
                 std::span<const int> steps, ForwardTrace* trace = nullptr) const;

 private:
  struct Conv {
    std::size_t weight = 0;
    std::size_t bias = 0;
    int stride = 1;
    int dilation = 1;
    int padding = 0;
  };
  struct Norm {
    std::size_t gamma = 0;
    std::size_t beta = 0;
    int groups = 1;
  };
  struct Linear {
    std::size_t weight = 0;
    std::size_t bias = 0;
  };
  struct ResBlock {
    Norm norm1;
    Conv conv1;
    Linear time_proj;
    Norm norm2;
    Conv conv2;
    bool has_shortcut = false;
    Conv shortcut;
  };
  struct DilatedLayer {
    Norm norm;
    Conv conv;
  };

  enum class Init { kFanIn, kZero, kOne };

  std::size_t declare(const std::string& name, std::vector<std::size_t> shape, Init init,
                      std::size_t fan_in);
  Conv declare_conv(const std::string& name, int in, int out, int kernel, int stride,
                    int dilation);
  Norm declare_norm(const std::string& name, int channels);
  Linear declare_linear(const std::string& name, int in, int out);
  ResBlock declare_block(const std::string& name, int in, int out);

  NodeId apply(Graph& g, const Conv& conv, NodeId x) const;
  NodeId apply(Graph& g, const Norm& norm, NodeId x) const;
  NodeId apply(Graph& g, const Linear& linear, NodeId x) const;
  NodeId apply(Graph& g, const ResBlock& block, NodeId x, NodeId time) const;

  UNetConfig config_;
  std::vector<std::string> names_;
  std::vector<std::vector<std::size_t>> shapes_;
  std::vector<Init> inits_;
  std::vector<std::size_t> fan_ins_;

  Linear time_fc1_;
  Linear time_fc2_;
  Conv input_conv_;
  std::array<ResBlock, kDownsampleStages> encoder_;
  std::array<Conv, kDownsampleStages> downsample_;
  std::array<DilatedLayer, 6> bottleneck_;
  std::array<Conv, kDownsampleStages> upsample_;
  std::array<ResBlock, kDownsampleStages> decoder_;
  Norm output_norm_;
  Conv output_conv_;
};

// Stacks per-item signals into a (B, 1, K) tensor.
Tensor stack_signals(const std::vector<std::vector<double>>& items);
Tensor signal_tensor(std::span<const double> samples);

}  // namespace rirforge::nn
