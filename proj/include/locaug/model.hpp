#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "locaug/augment.hpp"
#include "locaug/layers.hpp"
#include "locaug/tensor.hpp"

namespace locaug {

inline constexpr std::size_t kMaxDepth = 5;

std::vector<std::size_t> default_widths(std::size_t depth);

struct NetConfig {
  std::size_t depth = 2;
  AugmentSpec spec;
  std::vector<std::size_t> widths;  // one per pooling stage; empty = default_widths(depth)
  std::size_t out_channels = 1;     // 1: sigmoid saliency head; K > 1: class logits
  std::uint64_t seed = 0;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

// Gradient of every conv layer's weights and bias, in layer order.
struct ParamGrad {
  Tensor d_weights;
  Tensor d_bias;
};
using GradientStore = std::vector<ParamGrad>;

// Activations kept by a forward pass so backward can run later.
struct ForwardTrace {
  struct Encoder {
    Tensor input, pre1, act1, pre2, act2;
    PoolIndices pool;
  };
  struct Decoder {
    Tensor upsampled, pre;
  };
  std::vector<Encoder> encoders;
  std::vector<Decoder> decoders;  // deepest first
  Tensor head_input;
  Tensor prediction;
};

// Encoder-decoder FCN without skip connections:
//   encoder stage s: conv3x3 -> relu -> conv3x3 -> relu -> maxpool2
//   decoder stage s: upsample2 -> conv3x3 -> relu   (mirrored, deepest first)
//   head:            conv1x1 (+ sigmoid when out_channels == 1)
// Only the first conv sees the input channels, so location channels widen
// that layer alone.
class SegNet {
 public:
  static SegNet build(NetConfig config);

  const NetConfig& config() const noexcept { return config_; }
  std::size_t depth() const noexcept { return config_.depth; }
  std::size_t in_channels() const { return config_.spec.input_channels(); }

  std::vector<ConvParams>& layers() noexcept { return layers_; }
  const std::vector<ConvParams>& layers() const noexcept { return layers_; }
  std::string layer_name(std::size_t index) const;

  std::size_t param_count() const;

  // Throws when channels or spatial extents do not fit the network.
  void check_input(const Shape& shape) const;

  Tensor forward(const Tensor& x) const;
  ForwardTrace forward_trace(const Tensor& x) const;
  GradientStore backward(const ForwardTrace& trace, const Tensor& d_prediction) const;

  // Model file: "LNET", version, header, then LAUG tensors in layer order.
  std::vector<std::uint8_t> save() const;
  static SegNet load(std::span<const std::uint8_t> bytes);

 private:
  SegNet(NetConfig config, std::vector<ConvParams> layers)
      : config_(std::move(config)), layers_(std::move(layers)) {}

  NetConfig config_;
  std::vector<ConvParams> layers_;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Deterministic 64-bit seed derivation for independent random streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace locaug
