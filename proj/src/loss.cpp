#include "locaug/loss.hpp"

#include <algorithm>
#include <cmath>

#include "locaug/error.hpp"

namespace locaug {

namespace {
constexpr double kClamp = 1e-12;
}

LossResult bce_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw Error(ErrorKind::shape_mismatch, "bce_loss: prediction " + shape_string(pred.shape()) +
                                               " vs target " + shape_string(target.shape()));
  }
  const double count = static_cast<double>(pred.size());
  LossResult r{0.0, Tensor::zeros_like(pred)};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kClamp, 1.0 - kClamp);
    const double t = target[i];
    r.value -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    r.grad[i] = (p - t) / (p * (1.0 - p)) / count;
  }
  r.value /= count;
  return r;
}

LossResult softmax_ce_loss(const Tensor& logits, const Tensor& target) {
  if (logits.rank() != 4 || target.rank() != 4 || target.extent(1) != 1 ||
      target.extent(0) != logits.extent(0) || target.extent(2) != logits.extent(2) ||
      target.extent(3) != logits.extent(3)) {
    throw Error(ErrorKind::shape_mismatch, "softmax_ce_loss: logits " + shape_string(logits.shape()) +
                                               " vs target " + shape_string(target.shape()));
  }
  const std::size_t classes = logits.extent(1);
  const std::size_t plane = logits.extent(2) * logits.extent(3);
  LossResult r{0.0, Tensor::zeros_like(logits)};
  std::size_t counted = 0;
  std::vector<double> prob(classes);
  for (std::size_t n = 0; n < logits.extent(0); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double label = target[n * plane + p];
      if (label == kIgnoreLabel) continue;
      if (label < 0 || label >= static_cast<double>(classes) || label != std::floor(label)) {
        throw Error(ErrorKind::invalid_argument,
                    "softmax_ce_loss: label " + std::to_string(label) + " outside 0.." +
                        std::to_string(classes - 1));
      }
      const std::size_t base = n * classes * plane + p;
      double peak = logits[base];
      for (std::size_t c = 1; c < classes; ++c) peak = std::max(peak, logits[base + c * plane]);
      double total = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        prob[c] = std::exp(logits[base + c * plane] - peak);
        total += prob[c];
      }
      const auto k = static_cast<std::size_t>(label);
      r.value += std::log(total) + peak - logits[base + k * plane];
      for (std::size_t c = 0; c < classes; ++c) {
        r.grad[base + c * plane] = prob[c] / total - (c == k ? 1.0 : 0.0);
      }
      ++counted;
    }
  }
  if (counted == 0) return r;
  const double scale = 1.0 / static_cast<double>(counted);
  r.value *= scale;
  for (double& g : r.grad.values()) g *= scale;
  return r;
}

}  // namespace locaug
