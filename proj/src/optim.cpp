#include "locaug/optim.hpp"

#include <cmath>
#include <string>

#include "locaug/bytes.hpp"
#include "locaug/error.hpp"

namespace locaug {

namespace {

void check_pairs(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                 const OptimState& state, bool needs_second) {
  if (params.size() != grads.size() || state.first.size() != params.size() ||
      (needs_second && state.second.size() != params.size())) {
    throw Error(ErrorKind::shape_mismatch, "optimizer: parameter/gradient/state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() || params[i]->shape() != state.first[i].shape()) {
      throw Error(ErrorKind::shape_mismatch,
                  "optimizer: shape mismatch at parameter " + std::to_string(i));
    }
  }
}

void append_f64_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  bytes::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) bytes::put_u32(out, static_cast<std::uint32_t>(e));
  for (double v : t.values()) bytes::put_f64(out, v);
}

Tensor read_f64_tensor(bytes::Reader& in) {
  const std::uint32_t rank = in.u32("rank");
  if (rank == 0 || rank > 4) throw Error(ErrorKind::bad_format, "checkpoint: bad tensor rank");
  Shape shape(rank);
  for (auto& e : shape) e = in.u32("extent");
  const std::size_t count = element_count(shape);
  in.need(count * 8, "tensor payload");
  std::vector<double> values(count);
  for (auto& v : values) v = in.f64("tensor payload");
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw Error(ErrorKind::invalid_argument, "unknown optimizer '" + std::string(name) + "'");
}

OptimConfig OptimConfig::adam_defaults() { return OptimConfig{}; }

OptimConfig OptimConfig::sgd_defaults(double lr) {
  OptimConfig c;
  c.kind = OptimizerKind::sgd;
  c.lr = lr;
  c.momentum = 0.99;
  c.weight_decay = 5e-4;
  return c;
}

OptimState make_optim_state(const OptimConfig& config, std::span<Tensor* const> params) {
  OptimState s{config, 0, {}, {}};
  for (const Tensor* p : params) {
    s.first.push_back(Tensor::zeros_like(*p));
    if (config.kind == OptimizerKind::adam) s.second.push_back(Tensor::zeros_like(*p));
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, OptimState& state) {
  check_pairs(params, grads, state, true);
  const OptimConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  const double decay = c.lr * c.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    auto g = grads[i]->data();
    auto m = state.first[i].data();
    auto v = state.second[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      theta[j] -= decay * theta[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      theta[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

void sgd_momentum_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                       OptimState& state) {
  check_pairs(params, grads, state, false);
  const OptimConfig& c = state.config;
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->data();
    auto g = grads[i]->data();
    auto vel = state.first[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      vel[j] = c.momentum * vel[j] - c.lr * (g[j] + c.weight_decay * theta[j]);
      theta[j] += vel[j];
    }
  }
}

void optimizer_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
                    OptimState& state) {
  if (state.config.kind == OptimizerKind::adam) {
    adam_step(params, grads, state);
  } else {
    sgd_momentum_step(params, grads, state);
  }
}

std::vector<Tensor*> parameter_tensors(SegNet& net) {
  std::vector<Tensor*> out;
  for (auto& layer : net.layers()) {
    out.push_back(&layer.weights);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const Tensor*> gradient_tensors(const GradientStore& grads) {
  std::vector<const Tensor*> out;
  for (const auto& g : grads) {
    out.push_back(&g.d_weights);
    out.push_back(&g.d_bias);
  }
  return out;
}

void append_optim_state(std::vector<std::uint8_t>& out, const OptimState& s) {
  bytes::put_tag(out, "OPTS");
  bytes::put_u32(out, s.config.kind == OptimizerKind::sgd ? 1u : 0u);
  for (double v : {s.config.lr, s.config.beta1, s.config.beta2, s.config.eps, s.config.momentum,
                   s.config.weight_decay}) {
    bytes::put_f64(out, v);
  }
  bytes::put_u64(out, s.step);
  bytes::put_u32(out, static_cast<std::uint32_t>(s.first.size()));
  bytes::put_u32(out, static_cast<std::uint32_t>(s.second.size()));
  for (const Tensor& t : s.first) append_f64_tensor(out, t);
  for (const Tensor& t : s.second) append_f64_tensor(out, t);
}

OptimState read_optim_state(std::span<const std::uint8_t> data, std::size_t& offset) {
  bytes::Reader in(data, offset);
  if (in.tag(4, "optimizer tag") != "OPTS") throw Error(ErrorKind::bad_format, "checkpoint: missing optimizer state");
  OptimState s;
  const std::uint32_t kind = in.u32("optimizer kind");
  if (kind > 1) throw Error(ErrorKind::bad_format, "checkpoint: unknown optimizer kind");
  s.config.kind = kind == 1 ? OptimizerKind::sgd : OptimizerKind::adam;
  for (double* v : {&s.config.lr, &s.config.beta1, &s.config.beta2, &s.config.eps, &s.config.momentum,
                    &s.config.weight_decay}) {
    *v = in.f64("optimizer config");
  }
  s.step = in.u64("step");
  const std::uint32_t n_first = in.u32("moment count");
  const std::uint32_t n_second = in.u32("moment count");
  for (std::uint32_t i = 0; i < n_first; ++i) s.first.push_back(read_f64_tensor(in));
  for (std::uint32_t i = 0; i < n_second; ++i) s.second.push_back(read_f64_tensor(in));
  offset = in.offset();
  return s;
}

void append_parameters_f64(std::vector<std::uint8_t>& out, const SegNet& net) {
  for (const auto& layer : net.layers()) {
    append_f64_tensor(out, layer.weights);
    append_f64_tensor(out, layer.bias);
  }
}

void read_parameters_f64(std::span<const std::uint8_t> data, std::size_t& offset, SegNet& net) {
  bytes::Reader in(data, offset);
  for (Tensor* p : parameter_tensors(net)) {
    Tensor t = read_f64_tensor(in);
    if (t.shape() != p->shape()) throw Error(ErrorKind::bad_format, "checkpoint: parameter shape mismatch");
    *p = std::move(t);
  }
  offset = in.offset();
}

}  // namespace locaug
