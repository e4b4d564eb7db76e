#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "locaug/model.hpp"
#include "locaug/tensor.hpp"

namespace locaug {

enum class OptimizerKind { adam, sgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.99;
  double weight_decay = 1e-6;

  // Adam: lr 1e-4, weight decay 1e-6. SGD: momentum 0.99, weight decay 5e-4.
  static OptimConfig adam_defaults();
  static OptimConfig sgd_defaults(double lr);

  friend bool operator==(const OptimConfig&, const OptimConfig&) = default;
};

// Moments (Adam: first = m, second = v) or velocity (SGD: first only),
// one tensor per parameter tensor.
struct OptimState {
  OptimConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first;
  std::vector<Tensor> second;

  friend bool operator==(const OptimState&, const OptimState&) = default;
};

OptimState make_optim_state(const OptimConfig& config, std::span<Tensor* const> params);

// Bias-corrected Adam with decoupled weight decay:
//   theta <- theta - lr*wd*theta, then theta <- theta - lr*m_hat/(sqrt(v_hat)+eps).
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, OptimState& state);

// v <- mu*v - lr*(g + wd*theta); theta <- theta + v.
void sgd_momentum_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                       OptimState& state);

// On f = 0.5*|theta|^2 both decrease f monotonically below a step-size
// threshold: SGD needs lr <= (1 - sqrt(mu))^2 (no overshoot; lr < 2 without
// momentum); Adam needs every |theta_i| to stay above the distance its
// steps (about lr each) can cover.
void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                    OptimState& state);

// Flat views over a network's weights/biases and the matching gradients.
std::vector<Tensor*> parameter_tensors(SegNet& net);
std::vector<const Tensor*> gradient_tensors(const GradientStore& grads);

// Lossless (64-bit) state serialisation used by training checkpoints.
void append_optim_state(std::vector<std::uint8_t>& out, const OptimState& state);
OptimState read_optim_state(std::span<const std::uint8_t> bytes, std::size_t& offset);

// Lossless parameter dump, same order as parameter_tensors.
void append_parameters_f64(std::vector<std::uint8_t>& out, const SegNet& net);
void read_parameters_f64(std::span<const std::uint8_t> bytes, std::size_t& offset, SegNet& net);

}  // namespace locaug
