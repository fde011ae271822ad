#include "rirforge/nn/unet.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "rirforge/error.hpp"
#include "rirforge/nn/ops.hpp"

namespace rirforge::nn {

UNetConfig UNetConfig::paper() { return UNetConfig{}; }

UNetConfig UNetConfig::desk() {
  UNetConfig config;
  config.input_length = 2048;
  config.base_channels = 8;
  config.time_embed_dim = 32;
  return config;
}

int UNetConfig::stage_channels(int stage) const {
  return std::min(base_channels * channel_multipliers.at(static_cast<std::size_t>(stage)),
                  max_channels);
}

void validate(const UNetConfig& config) {
  const auto fail = [](const std::string& why) {
    throw Error(ErrorKind::kInvalidConfig, why);
  };
  if (config.base_channels <= 0) fail("base_channels must be positive");
  if (config.max_channels <= 0) fail("max_channels must be positive");
  for (int m : config.channel_multipliers) {
    if (m <= 0) fail("channel multipliers must be positive");
  }
  if (config.bottleneck_dilations != kBottleneckDilations) {
    fail("bottleneck dilations must be 1, 2, 4, 8, 16, 32");
  }
  if (config.time_embed_dim <= 0 || config.time_embed_dim % 2 != 0) {
    fail("time_embed_dim must be positive and even");
  }
  if (config.norm_groups <= 0) fail("norm_groups must be positive");
  if (config.input_length == 0 || config.input_length % kLengthMultiple != 0) {
    fail("input_length must be a positive multiple of 128");
  }
}

std::string to_json(const UNetConfig& config) {
  nlohmann::json j;
  j["input_length"] = config.input_length;
  j["base_channels"] = config.base_channels;
  j["channel_multipliers"] = config.channel_multipliers;
  j["max_channels"] = config.max_channels;
  j["bottleneck_dilations"] = config.bottleneck_dilations;
  j["time_embed_dim"] = config.time_embed_dim;
  j["norm_groups"] = config.norm_groups;
  return j.dump();
}

UNetConfig config_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    UNetConfig config;
    config.input_length = j.at("input_length").get<std::size_t>();
    config.base_channels = j.at("base_channels").get<int>();
    config.channel_multipliers = j.at("channel_multipliers").get<std::array<int, 7>>();
    config.max_channels = j.at("max_channels").get<int>();
    config.bottleneck_dilations = j.at("bottleneck_dilations").get<std::array<int, 6>>();
    config.time_embed_dim = j.at("time_embed_dim").get<int>();
    config.norm_groups = j.at("norm_groups").get<int>();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("bad network config: ") + e.what());
  }
}

std::uint64_t config_hash(const UNetConfig& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : to_json(config)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> time_embedding(int t, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "embedding dimension must be positive and even");
  }
  const int half = dim / 2;
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    out[2 * i] = std::sin(t * freq);
    out[2 * i + 1] = std::cos(t * freq);
  }
  return out;
}

int norm_groups_for(int channels, int max_groups) {
  int groups = std::max(1, std::min(max_groups, channels / 4));
  while (channels % groups != 0) --groups;
  return groups;
}

UNet::UNet(UNetConfig config) : config_(config) {
  validate(config_);
  const int temb = config_.time_embed_dim;
  time_fc1_ = declare_linear("time.fc1", temb, temb);
  time_fc2_ = declare_linear("time.fc2", temb, temb);

  const int base = config_.stage_channels(0);
  input_conv_ = declare_conv("input", 2, base, 3, 1, 1);

  int channels = base;
  for (int s = 0; s < kDownsampleStages; ++s) {
    const int width = config_.stage_channels(s);
    const std::string prefix = "enc" + std::to_string(s);
    encoder_[s] = declare_block(prefix + ".block", channels, width);
    downsample_[s] = declare_conv(prefix + ".down", width, width, 3, 2, 1);
    channels = width;
  }

  for (std::size_t i = 0; i < bottleneck_.size(); ++i) {
    const std::string prefix = "mid" + std::to_string(i);
    bottleneck_[i].norm = declare_norm(prefix + ".norm", channels);
    bottleneck_[i].conv = declare_conv(prefix + ".conv", channels, channels, 3, 1,
                                       config_.bottleneck_dilations[i]);
  }

  for (int s = kDownsampleStages - 1; s >= 0; --s) {
    const int width = config_.stage_channels(s);
    const std::string prefix = "dec" + std::to_string(s);
    upsample_[s] = declare_conv(prefix + ".up", channels, channels, 3, 1, 1);
    decoder_[s] = declare_block(prefix + ".block", channels + width, width);
    channels = width;
  }

  output_norm_ = declare_norm("output.norm", channels);
  output_conv_ = declare_conv("output.conv", channels, 1, 3, 1, 1);
}

std::size_t UNet::declare(const std::string& name, std::vector<std::size_t> shape, Init init,
                          std::size_t fan_in) {
  names_.push_back(name);
  shapes_.push_back(std::move(shape));
  inits_.push_back(init);
  fan_ins_.push_back(fan_in);
  return names_.size() - 1;
}

UNet::Conv UNet::declare_conv(const std::string& name, int in, int out, int kernel,
                              int stride, int dilation) {
  Conv conv;
  const auto fan_in = static_cast<std::size_t>(in * kernel);
  conv.weight = declare(name + ".weight",
                        {static_cast<std::size_t>(out), static_cast<std::size_t>(in),
                         static_cast<std::size_t>(kernel)},
                        Init::kFanIn, fan_in);
  conv.bias = declare(name + ".bias", {static_cast<std::size_t>(out)}, Init::kZero, 0);
  conv.stride = stride;
  conv.dilation = dilation;
  conv.padding = stride == 1 ? dilation * (kernel - 1) / 2 : (kernel - 1) / 2;
  return conv;
}

UNet::Norm UNet::declare_norm(const std::string& name, int channels) {
  Norm norm;
  norm.gamma = declare(name + ".gamma", {static_cast<std::size_t>(channels)}, Init::kOne, 0);
  norm.beta = declare(name + ".beta", {static_cast<std::size_t>(channels)}, Init::kZero, 0);
  norm.groups = norm_groups_for(channels, config_.norm_groups);
  return norm;
}

UNet::Linear UNet::declare_linear(const std::string& name, int in, int out) {
  Linear linear;
  linear.weight = declare(name + ".weight",
                          {static_cast<std::size_t>(out), static_cast<std::size_t>(in)},
                          Init::kFanIn, static_cast<std::size_t>(in));
  linear.bias = declare(name + ".bias", {static_cast<std::size_t>(out)}, Init::kZero, 0);
  return linear;
}

UNet::ResBlock UNet::declare_block(const std::string& name, int in, int out) {
  ResBlock block;
  block.norm1 = declare_norm(name + ".norm1", in);
  block.conv1 = declare_conv(name + ".conv1", in, out, 3, 1, 1);
  block.time_proj = declare_linear(name + ".time", config_.time_embed_dim, out);
  block.norm2 = declare_norm(name + ".norm2", out);
  block.conv2 = declare_conv(name + ".conv2", out, out, 3, 1, 1);
  block.has_shortcut = in != out;
  if (block.has_shortcut) block.shortcut = declare_conv(name + ".skip", in, out, 1, 1, 1);
  return block;
}

ParameterSet UNet::init_params(std::mt19937_64& rng) const {
  ParameterSet params;
  params.names = names_;
  params.tensors.reserve(names_.size());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    Tensor t(shapes_[i], 0.0);
    switch (inits_[i]) {
      case Init::kZero:
        break;
      case Init::kOne:
        std::fill(t.data.begin(), t.data.end(), 1.0);
        break;
      case Init::kFanIn: {
        std::normal_distribution<double> normal(
            0.0, 1.0 / std::sqrt(static_cast<double>(fan_ins_[i])));
        for (double& v : t.data) v = normal(rng);
        break;
      }
    }
    params.tensors.push_back(std::move(t));
  }
  return params;
}

std::size_t UNet::parameter_count() const {
  std::size_t total = 0;
  for (const auto& shape : shapes_) total += element_count(shape);
  return total;
}

NodeId UNet::apply(Graph& g, const Conv& conv, NodeId x) const {
  return conv1d(g, x, g.parameter(conv.weight), g.parameter(conv.bias), conv.stride,
                conv.dilation, conv.padding);
}

NodeId UNet::apply(Graph& g, const Norm& norm, NodeId x) const {
  return group_norm(g, x, g.parameter(norm.gamma), g.parameter(norm.beta), norm.groups);
}

NodeId UNet::apply(Graph& g, const Linear& lin, NodeId x) const {
  return linear(g, x, g.parameter(lin.weight), g.parameter(lin.bias));
}

NodeId UNet::apply(Graph& g, const ResBlock& block, NodeId x, NodeId time) const {
  NodeId h = apply(g, block.conv1, silu(g, apply(g, block.norm1, x)));
  h = add_channel_offset(g, h, apply(g, block.time_proj, time));
  h = apply(g, block.conv2, silu(g, apply(g, block.norm2, h)));
  const NodeId shortcut = block.has_shortcut ? apply(g, block.shortcut, x) : x;
  return add(g, h, shortcut);
}

NodeId UNet::forward(Graph& g, NodeId x_t, NodeId conditioner, std::span<const int> steps,
                     ForwardTrace* trace) const {
  const Tensor& xv = g.value(x_t);
  const Tensor& cv = g.value(conditioner);
  if (xv.rank() != 3 || xv.dim(1) != 1 || xv.shape != cv.shape) {
    throw Error(ErrorKind::kShapeMismatch, "x_t and conditioner must both be (B, 1, K)");
  }
  const std::size_t batch = xv.dim(0);
  const std::size_t length = xv.dim(2);
  if (steps.size() != batch) {
    throw Error(ErrorKind::kShapeMismatch, "need one diffusion step per batch item");
  }
  if (length == 0 || length % kLengthMultiple != 0) {
    throw Error(ErrorKind::kLengthNotDivisible,
                "signal length " + std::to_string(length) + " is not a multiple of 128");
  }

  const auto dim = static_cast<std::size_t>(config_.time_embed_dim);
  Tensor sinusoids({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) {
    const auto features = time_embedding(steps[b], config_.time_embed_dim);
    std::copy(features.begin(), features.end(), sinusoids.data.begin() + b * dim);
  }
  NodeId time = g.constant(std::move(sinusoids));
  time = apply(g, time_fc2_, silu(g, apply(g, time_fc1_, time)));
  const NodeId time_act = silu(g, time);

  // Channel 0 carries the conditioner, channel 1 the noisy signal.
  NodeId h = apply(g, input_conv_, concat_channels(g, conditioner, x_t));

  std::array<NodeId, kDownsampleStages> skips{};
  if (trace != nullptr) trace->encoder_lengths.clear();
  for (int s = 0; s < kDownsampleStages; ++s) {
    h = apply(g, encoder_[s], h, time_act);
    skips[s] = h;
    if (trace != nullptr) trace->encoder_lengths.push_back(g.value(h).dim(2));
    h = apply(g, downsample_[s], h);
  }

  if (trace != nullptr) trace->bottleneck_length = g.value(h).dim(2);
  for (const DilatedLayer& layer : bottleneck_) {
    h = add(g, h, apply(g, layer.conv, silu(g, apply(g, layer.norm, h))));
  }

  for (int s = kDownsampleStages - 1; s >= 0; --s) {
    h = apply(g, upsample_[s], upsample2(g, h));
    h = concat_channels(g, h, skips[s]);
    h = apply(g, decoder_[s], h, time_act);
  }
  return apply(g, output_conv_, silu(g, apply(g, output_norm_, h)));
}

Tensor UNet::predict(const ParameterSet& params, const Tensor& x_t, const Tensor& conditioner,
                     std::span<const int> steps, ForwardTrace* trace) const {
  if (params.names != names_) {
    throw Error(ErrorKind::kShapeMismatch, "parameters do not match the network layout");
  }
  Graph g(&params, /*record=*/false);
  const NodeId out = forward(g, g.constant(x_t), g.constant(conditioner), steps, trace);
  return g.value(out);
}

Tensor stack_signals(const std::vector<std::vector<double>>& items) {
  if (items.empty()) throw Error(ErrorKind::kShapeMismatch, "cannot stack an empty batch");
  const std::size_t length = items.front().size();
  Tensor out({items.size(), 1, length});
  for (std::size_t b = 0; b < items.size(); ++b) {
    if (items[b].size() != length) {
      throw Error(ErrorKind::kShapeMismatch, "batch items differ in length");
    }
    std::copy(items[b].begin(), items[b].end(), out.data.begin() + b * length);
  }
  return out;
}

Tensor signal_tensor(std::span<const double> samples) {
  return Tensor({1, 1, samples.size()}, std::vector<double>(samples.begin(), samples.end()));
}

}  // namespace rirforge::nn
