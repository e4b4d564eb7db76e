#include "locaug/model.hpp"

#include <cmath>
#include <random>

#include "locaug/bytes.hpp"
#include "locaug/error.hpp"

namespace locaug {

namespace {

// Stream ids for weight initialisation. The colour weights of the first
// layer use the same stream in every variant; each location channel gets a
// stream of its own.
constexpr std::uint64_t kExtraChannelStream = 1000;

void fill_normal(std::span<double> out, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : out) v = dist(rng);
}

std::uint32_t variant_code(Variant v) { return static_cast<std::uint32_t>(v); }

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> default_widths(std::size_t depth) {
  static constexpr std::size_t widths[kMaxDepth] = {16, 32, 64, 128, 256};
  if (depth == 0 || depth > kMaxDepth) {
    throw Error(ErrorKind::invalid_argument, "depth must be in 1..5, got " + std::to_string(depth));
  }
  return {widths, widths + depth};
}

SegNet SegNet::build(NetConfig config) {
  if (config.depth == 0 || config.depth > kMaxDepth) {
    throw Error(ErrorKind::invalid_argument,
                "depth must be in 1..5, got " + std::to_string(config.depth));
  }
  if (config.widths.empty()) config.widths = default_widths(config.depth);
  if (config.widths.size() != config.depth) {
    throw Error(ErrorKind::invalid_argument, "widths has " + std::to_string(config.widths.size()) +
                                                 " entries but depth is " +
                                                 std::to_string(config.depth));
  }
  for (std::size_t w : config.widths) {
    if (w == 0) throw Error(ErrorKind::invalid_argument, "widths must be positive");
  }
  if (config.out_channels == 0) throw Error(ErrorKind::invalid_argument, "out_channels must be >= 1");

  const auto& widths = config.widths;
  std::vector<ConvParams> layers;
  std::size_t in = config.spec.input_channels();
  for (std::size_t s = 0; s < config.depth; ++s) {
    layers.push_back(make_conv(in, widths[s], 3));
    layers.push_back(make_conv(widths[s], widths[s], 3));
    in = widths[s];
  }
  for (std::size_t s = config.depth; s-- > 0;) {
    const std::size_t out = s > 0 ? widths[s - 1] : widths[0];
    layers.push_back(make_conv(widths[s], out, 3));
  }
  layers.push_back(make_conv(widths[0], config.out_channels, 1));

  for (std::size_t i = 0; i < layers.size(); ++i) {
    ConvParams& layer = layers[i];
    const bool is_head = i + 1 == layers.size();
    const std::size_t k2 = layer.kernel() * layer.kernel();
    if (i == 0) {
      // He scaling by the colour fan-in, shared with the extra channels.
      const double stddev = std::sqrt(2.0 / static_cast<double>(3 * k2));
      std::mt19937_64 colour_rng(mix_seed(config.seed, 0));
      std::normal_distribution<double> colour(0.0, stddev);
      std::vector<std::mt19937_64> extra_rngs;
      for (std::size_t j = 0; j + 3 < layer.in_channels(); ++j) {
        extra_rngs.emplace_back(mix_seed(config.seed, kExtraChannelStream + j));
      }
      std::normal_distribution<double> extra(0.0, stddev);
      for (std::size_t co = 0; co < layer.out_channels(); ++co) {
        for (std::size_t ci = 0; ci < layer.in_channels(); ++ci) {
          for (std::size_t t = 0; t < k2; ++t) {
            const std::size_t idx = (co * layer.in_channels() + ci) * k2 + t;
            layer.weights[idx] = ci < 3 ? colour(colour_rng) : extra(extra_rngs[ci - 3]);
          }
        }
      }
    } else {
      const double fan_in = static_cast<double>(layer.in_channels() * k2);
      const double stddev = std::sqrt((is_head ? 1.0 : 2.0) / fan_in);
      fill_normal(layer.weights.data(), stddev, mix_seed(config.seed, i));
    }
  }
  return SegNet(std::move(config), std::move(layers));
}

std::string SegNet::layer_name(std::size_t index) const {
  const std::size_t d = config_.depth;
  if (index < 2 * d) {
    return "encoder" + std::to_string(index / 2) + ".conv" + std::to_string(index % 2 + 1);
  }
  if (index < 3 * d) return "decoder" + std::to_string(3 * d - 1 - index) + ".conv";
  return "head";
}

std::size_t SegNet::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

void SegNet::check_input(const Shape& shape) const {
  if (shape.size() != 4) {
    throw Error(ErrorKind::shape_mismatch, "network input must be NCHW, got " + shape_string(shape));
  }
  if (shape[1] != in_channels()) {
    throw Error(ErrorKind::shape_mismatch,
                "channel mismatch: network expects " + std::to_string(in_channels()) +
                    " input channels (" + std::string(to_string(config_.spec.variant)) + "), got " +
                    std::to_string(shape[1]));
  }
  const std::size_t factor = std::size_t{1} << config_.depth;
  if (shape[2] % factor != 0) {
    throw Error(ErrorKind::shape_mismatch, "H=" + std::to_string(shape[2]) +
                                               " is not divisible by 2^depth=" + std::to_string(factor));
  }
  if (shape[3] % factor != 0) {
    throw Error(ErrorKind::shape_mismatch, "W=" + std::to_string(shape[3]) +
                                               " is not divisible by 2^depth=" + std::to_string(factor));
  }
}

ForwardTrace SegNet::forward_trace(const Tensor& x) const {
  check_input(x.shape());
  const std::size_t d = config_.depth;
  ForwardTrace t;
  t.encoders.reserve(d);
  t.decoders.reserve(d);
  Tensor a = x;
  for (std::size_t s = 0; s < d; ++s) {
    ForwardTrace::Encoder e;
    e.input = std::move(a);
    e.pre1 = conv2d(e.input, layers_[2 * s]);
    e.act1 = relu(e.pre1);
    e.pre2 = conv2d(e.act1, layers_[2 * s + 1]);
    e.act2 = relu(e.pre2);
    PoolResult pooled = maxpool2(e.act2);
    a = std::move(pooled.output);
    e.pool = std::move(pooled.indices);
    t.encoders.push_back(std::move(e));
  }
  for (std::size_t k = 0; k < d; ++k) {
    ForwardTrace::Decoder dec;
    dec.upsampled = upsample2_nearest(a);
    dec.pre = conv2d(dec.upsampled, layers_[2 * d + k]);
    a = relu(dec.pre);
    t.decoders.push_back(std::move(dec));
  }
  t.head_input = std::move(a);
  Tensor logits = conv2d(t.head_input, layers_.back());
  t.prediction = config_.out_channels == 1 ? sigmoid(logits) : std::move(logits);
  return t;
}

Tensor SegNet::forward(const Tensor& x) const { return forward_trace(x).prediction; }

GradientStore SegNet::backward(const ForwardTrace& t, const Tensor& d_prediction) const {
  if (d_prediction.shape() != t.prediction.shape()) {
    throw Error(ErrorKind::shape_mismatch, "backward: gradient shape " +
                                               shape_string(d_prediction.shape()) +
                                               " does not match prediction " +
                                               shape_string(t.prediction.shape()));
  }
  const std::size_t d = config_.depth;
  GradientStore grads(layers_.size());
  auto record = [&](std::size_t i, LayerGrad& g) {
    grads[i] = ParamGrad{std::move(g.d_weights), std::move(g.d_bias)};
  };

  Tensor g = config_.out_channels == 1 ? sigmoid_backward(t.prediction, d_prediction) : d_prediction;
  LayerGrad lg = conv2d_backward(t.head_input, layers_.back(), g);
  g = std::move(lg.d_input);
  record(layers_.size() - 1, lg);

  for (std::size_t k = d; k-- > 0;) {
    const auto& dec = t.decoders[k];
    g = relu_backward(dec.pre, g);
    lg = conv2d_backward(dec.upsampled, layers_[2 * d + k], g);
    g = upsample2_backward(lg.d_input);
    record(2 * d + k, lg);
  }
  for (std::size_t s = d; s-- > 0;) {
    const auto& e = t.encoders[s];
    g = maxpool2_backward(e.pool, g);
    g = relu_backward(e.pre2, g);
    lg = conv2d_backward(e.act1, layers_[2 * s + 1], g);
    g = relu_backward(e.pre1, lg.d_input);
    record(2 * s + 1, lg);
    lg = conv2d_backward(e.input, layers_[2 * s], g);
    g = std::move(lg.d_input);
    record(2 * s, lg);
  }
  return grads;
}

std::vector<std::uint8_t> SegNet::save() const {
  std::vector<std::uint8_t> out;
  bytes::put_tag(out, "LNET");
  bytes::put_u32(out, kModelFormatVersion);
  bytes::put_u32(out, static_cast<std::uint32_t>(config_.depth));
  for (std::size_t w : config_.widths) bytes::put_u32(out, static_cast<std::uint32_t>(w));
  bytes::put_u32(out, variant_code(config_.spec.variant));
  bytes::put_u32(out, config_.spec.norm == Normalization::symmetric ? 1u : 0u);
  bytes::put_u32(out, static_cast<std::uint32_t>(config_.out_channels));
  bytes::put_u64(out, config_.seed);
  for (const auto& layer : layers_) {
    append_tensor(out, layer.weights);
    append_tensor(out, layer.bias);
  }
  return out;
}

SegNet SegNet::load(std::span<const std::uint8_t> data) {
  bytes::Reader in(data);
  if (in.tag(4, "model magic") != "LNET") throw Error(ErrorKind::bad_format, "bad magic: expected LNET");
  const std::uint32_t version = in.u32("version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::bad_format, "model format version mismatch: file has " +
                                           std::to_string(version) + ", expected " +
                                           std::to_string(kModelFormatVersion));
  }
  NetConfig config;
  config.depth = in.u32("depth");
  if (config.depth == 0 || config.depth > kMaxDepth) {
    throw Error(ErrorKind::bad_format, "model header: invalid depth " + std::to_string(config.depth));
  }
  for (std::size_t s = 0; s < config.depth; ++s) config.widths.push_back(in.u32("widths"));
  const std::uint32_t variant = in.u32("variant");
  if (variant > variant_code(Variant::rgb_lin)) {
    throw Error(ErrorKind::bad_format, "model header: invalid variant code");
  }
  config.spec.variant = static_cast<Variant>(variant);
  const std::uint32_t norm = in.u32("norm");
  if (norm > 1) throw Error(ErrorKind::bad_format, "model header: invalid normalization code");
  config.spec.norm = norm == 1 ? Normalization::symmetric : Normalization::unit_interval;
  config.out_channels = in.u32("out_channels");
  config.seed = in.u64("seed");

  SegNet net = build(config);
  std::size_t offset = in.offset();
  for (auto& layer : net.layers_) {
    Tensor w = read_tensor_at(data, offset);
    Tensor b = read_tensor_at(data, offset);
    if (w.shape() != layer.weights.shape() || b.shape() != layer.bias.shape()) {
      throw Error(ErrorKind::bad_format, "model file: parameter shape does not match header");
    }
    layer.weights = std::move(w);
    layer.bias = std::move(b);
  }
  if (offset != data.size()) throw Error(ErrorKind::bad_format, "model file: trailing bytes");
  return net;
}

}  // namespace locaug
