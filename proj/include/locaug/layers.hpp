#pragma once

#include <cstdint>
#include <vector>

#include "locaug/tensor.hpp"

namespace locaug {

enum class Padding { zero, none };

// Weights [Cout,Cin,K,K] (K = 3, or 1 for a pointwise head) and bias [Cout].
// Cross-correlation convention, stride 1. Zero padding keeps H and W.
struct ConvParams {
  Tensor weights;
  Tensor bias;
  Padding padding = Padding::zero;

  std::size_t out_channels() const { return weights.extent(0); }
  std::size_t in_channels() const { return weights.extent(1); }
  std::size_t kernel() const { return weights.extent(2); }
};

// Gradients of a conv layer; each has its primal's shape.
struct LayerGrad {
  Tensor d_weights;
  Tensor d_bias;
  Tensor d_input;
};

ConvParams make_conv(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                     Padding padding = Padding::zero);

Tensor conv2d(const Tensor& x, const ConvParams& p);
LayerGrad conv2d_backward(const Tensor& x, const ConvParams& p, const Tensor& d_out);

// Argmax record of a 2x2/stride-2 max pool: flat index into each input
// plane for every output element.
struct PoolIndices {
  Shape input_shape;
  std::vector<std::uint32_t> argmax;
};

struct PoolResult {
  Tensor output;
  PoolIndices indices;
};

// Ties go to the first element of the window in row-major order.
PoolResult maxpool2(const Tensor& x);
Tensor maxpool2_backward(const PoolIndices& indices, const Tensor& d_out);

Tensor upsample2_nearest(const Tensor& x);
Tensor upsample2_backward(const Tensor& d_out);

Tensor relu(const Tensor& x);
// Derivative at 0 is taken as 0.
Tensor relu_backward(const Tensor& x, const Tensor& d_out);

Tensor sigmoid(const Tensor& x);
// Takes the forward output y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& y, const Tensor& d_out);

// Per-pixel softmax over the channel axis.
Tensor softmax_channels(const Tensor& x);
// Takes the forward output y = softmax_channels(x).
Tensor softmax_channels_backward(const Tensor& y, const Tensor& d_out);

}  // namespace locaug
