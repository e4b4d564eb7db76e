#pragma once

#include <cstdint>

#include "locaug/tensor.hpp"

namespace locaug {

inline constexpr std::uint8_t kIgnoreLabel = 255;

struct LossResult {
  double value = 0.0;
  Tensor grad;  // d(value)/d(input), same shape as the prediction
};

// Mean binary cross-entropy. Predictions are clamped to [1e-12, 1 - 1e-12]
// before the logs; the gradient is evaluated at the clamped value.
LossResult bce_loss(const Tensor& pred, const Tensor& target);

// Mean per-pixel softmax cross-entropy over logits [N,K,H,W] against a
// class map [N,1,H,W]. Pixels labelled kIgnoreLabel contribute nothing.
LossResult softmax_ce_loss(const Tensor& logits, const Tensor& target);

}  // namespace locaug
