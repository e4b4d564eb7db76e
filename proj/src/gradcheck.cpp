#include "locaug/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "locaug/augment.hpp"
#include "locaug/error.hpp"
#include "locaug/loss.hpp"
#include "locaug/model.hpp"
#include "locaug/optim.hpp"

namespace locaug {

namespace {

Tensor random_normal(Shape shape, std::mt19937_64& rng, double stddev = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

void append(std::vector<double>& out, const Tensor& t) {
  out.insert(out.end(), t.values().begin(), t.values().end());
}

void append(std::vector<double>& out, const std::vector<double>& v) { out.insert(out.end(), v.begin(), v.end()); }

// Checks an elementwise/structural op through the objective sum(r * op(x)).
GradCheckCase unary_case(std::string name, std::function<Tensor(std::mt19937_64&)> make_input,
                         std::function<Tensor(const Tensor&)> forward,
                         std::function<Tensor(const Tensor& x, const Tensor& y, const Tensor& d_out)> backward) {
  return {std::move(name), [=](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            Tensor x = make_input(rng);
            const Tensor y = forward(x);
            const Tensor r = random_normal(y.shape(), rng);
            GradientSample s;
            s.analytic = backward(x, y, r).values();
            s.numeric = central_difference([&] { return dot(r, forward(x)); }, x.data());
            return s;
          }};
}

Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor x = random_normal(std::move(shape), rng);
  for (double& v : x.values()) {
    if (std::abs(v) < 1e-2) v = v < 0 ? v - 1e-2 : v + 1e-2;
  }
  return x;
}

// Distinct values spaced well beyond the difference step so no pooling
// window is near a tie.
Tensor distinct_values(Shape shape, std::mt19937_64& rng) {
  Tensor x(std::move(shape));
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> jitter(0.0, 0.3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * (static_cast<double>(order[i]) + jitter(rng));
  return x;
}

GradCheckCase bce_case() {
  return {"bce_loss", [](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(0.05, 0.95);
            std::bernoulli_distribution coin(0.4);
            Tensor pred({2, 1, 3, 4}), target({2, 1, 3, 4});
            for (std::size_t i = 0; i < pred.size(); ++i) {
              pred[i] = u(rng);
              target[i] = coin(rng) ? 1.0 : 0.0;
            }
            GradientSample s;
            s.analytic = bce_loss(pred, target).grad.values();
            s.numeric = central_difference([&] { return bce_loss(pred, target).value; }, pred.data());
            return s;
          }};
}

GradCheckCase softmax_ce_case() {
  return {"softmax_ce_loss", [](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            constexpr std::size_t classes = 4;
            Tensor logits = random_normal({2, classes, 3, 3}, rng, 2.0);
            Tensor target({2, 1, 3, 3});
            std::uniform_int_distribution<int> label(0, classes);
            for (double& v : target.values()) {
              const int k = label(rng);
              v = k == static_cast<int>(classes) ? kIgnoreLabel : k;
            }
            GradientSample s;
            s.analytic = softmax_ce_loss(logits, target).grad.values();
            s.numeric = central_difference([&] { return softmax_ce_loss(logits, target).value; }, logits.data());
            return s;
          }};
}

constexpr double kKinkMargin = 1e-3;

bool clear_of_kinks(const ForwardTrace& trace) {
  const auto relu_clear = [](const Tensor& pre) {
    for (double v : pre.values()) {
      if (std::abs(v) < kKinkMargin) return false;
    }
    return true;
  };
  for (const auto& e : trace.encoders) {
    if (!relu_clear(e.pre1) || !relu_clear(e.pre2)) return false;
    const Tensor& a = e.act2;
    for (std::size_t n = 0; n < a.extent(0); ++n) {
      for (std::size_t c = 0; c < a.extent(1); ++c) {
        for (std::size_t h = 0; h < a.extent(2); h += 2) {
          for (std::size_t w = 0; w < a.extent(3); w += 2) {
            double v[4] = {a.at(n, c, h, w), a.at(n, c, h, w + 1), a.at(n, c, h + 1, w), a.at(n, c, h + 1, w + 1)};
            std::sort(v, v + 4);
            if (v[3] > 0.0 && v[3] - v[2] < kKinkMargin) return false;
          }
        }
      }
    }
  }
  for (const auto& d : trace.decoders) {
    if (!relu_clear(d.pre)) return false;
  }
  return true;
}

GradCheckCase network_case() {
  return {"segnet.depth2", [](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            NetConfig cfg;
            cfg.depth = 2;
            cfg.widths = {4, 4};
            cfg.spec.variant = Variant::rgb_dist_coord;
            cfg.seed = seed;
            SegNet net = SegNet::build(cfg);
            // Nonzero biases keep relus away from exactly-zero activations.
            for (auto& layer : net.layers()) {
              for (double& b : layer.bias.values()) b = std::normal_distribution<double>(0.0, 0.1)(rng);
            }
            std::uniform_real_distribution<double> u(0.0, 1.0);
            Tensor image({2, 3, 8, 8});
            for (double& v : image.values()) v = u(rng);
            const Tensor x = augment_image(image, cfg.spec);
            Tensor target({2, 1, 8, 8});
            for (double& v : target.values()) v = u(rng) < 0.3 ? 1.0 : 0.0;

            ForwardTrace trace = net.forward_trace(x);
            // Redraw biases until every relu input and pooling window is
            // clear of its kink by more than a finite-difference step can move it.
            while (!clear_of_kinks(trace)) {
              for (auto& layer : net.layers()) {
                for (double& b : layer.bias.values()) b = std::normal_distribution<double>(0.0, 0.1)(rng);
              }
              trace = net.forward_trace(x);
            }
            const LossResult loss = bce_loss(trace.prediction, target);
            const GradientStore grads = net.backward(trace, loss.grad);
            GradientSample s;
            for (const Tensor* g : gradient_tensors(grads)) append(s.analytic, *g);
            for (Tensor* p : parameter_tensors(net)) {
              append(s.numeric, central_difference([&] { return bce_loss(net.forward(x), target).value; },
                                                   p->data()));
            }
            return s;
          }};
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

double max_relative_error(const GradientSample& sample) {
  if (sample.analytic.size() != sample.numeric.size()) {
    throw Error(ErrorKind::shape_mismatch, "gradient check: analytic and numeric sizes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < sample.analytic.size(); ++i) {
    const double e = relative_error(sample.analytic[i], sample.numeric[i]);
    if (!(e <= worst)) worst = e;  // NaN propagates as a failure
  }
  return worst;
}

std::vector<double> central_difference(const std::function<double()>& f, std::span<double> x, double eps) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f();
    x[i] = saved - eps;
    const double down = f();
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

GradCheckCase conv_gradcheck_case(std::string name, Padding padding, std::size_t kernel, ConvBackward backward) {
  return {std::move(name), [=](std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            ConvParams p = make_conv(3, 2, kernel, padding);
            p.weights = random_normal(p.weights.shape(), rng, 0.5);
            p.bias = random_normal(p.bias.shape(), rng, 0.5);
            Tensor x = random_normal({2, 3, 5, 6}, rng);
            const Tensor r = random_normal(conv2d(x, p).shape(), rng);
            const LayerGrad g = backward(x, p, r);
            auto objective = [&] { return dot(r, conv2d(x, p)); };
            GradientSample s;
            append(s.analytic, g.d_input);
            append(s.analytic, g.d_weights);
            append(s.analytic, g.d_bias);
            append(s.numeric, central_difference(objective, x.data()));
            append(s.numeric, central_difference(objective, p.weights.data()));
            append(s.numeric, central_difference(objective, p.bias.data()));
            return s;
          }};
}

std::vector<GradCheckCase> default_gradcheck_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back(conv_gradcheck_case("conv2d.zero_pad", Padding::zero, 3));
  cases.push_back(conv_gradcheck_case("conv2d.no_pad", Padding::none, 3));
  cases.push_back(conv_gradcheck_case("conv2d.pointwise", Padding::zero, 1));
  cases.push_back(unary_case(
      "maxpool2", [](std::mt19937_64& rng) { return distinct_values({2, 2, 8, 8}, rng); },
      [](const Tensor& x) { return maxpool2(x).output; },
      [](const Tensor& x, const Tensor&, const Tensor& d) { return maxpool2_backward(maxpool2(x).indices, d); }));
  cases.push_back(unary_case(
      "upsample2_nearest", [](std::mt19937_64& rng) { return random_normal({2, 2, 3, 4}, rng); },
      upsample2_nearest, [](const Tensor&, const Tensor&, const Tensor& d) { return upsample2_backward(d); }));
  cases.push_back(unary_case(
      "relu", [](std::mt19937_64& rng) { return away_from_zero({2, 3, 4, 4}, rng); }, relu,
      [](const Tensor& x, const Tensor&, const Tensor& d) { return relu_backward(x, d); }));
  cases.push_back(unary_case(
      "sigmoid", [](std::mt19937_64& rng) { return random_normal({2, 3, 4, 4}, rng, 2.0); }, sigmoid,
      [](const Tensor&, const Tensor& y, const Tensor& d) { return sigmoid_backward(y, d); }));
  cases.push_back(unary_case(
      "softmax_channels", [](std::mt19937_64& rng) { return random_normal({2, 4, 3, 3}, rng, 2.0); },
      softmax_channels,
      [](const Tensor&, const Tensor& y, const Tensor& d) { return softmax_channels_backward(y, d); }));
  cases.push_back(bce_case());
  cases.push_back(softmax_ce_case());
  cases.push_back(network_case());
  return cases;
}

GradCheckReport run_gradchecks(std::span<const GradCheckCase> cases, std::size_t instances, double tolerance) {
  if (cases.empty()) throw Error(ErrorKind::invalid_argument, "gradcheck: no layers to check");
  if (instances == 0) throw Error(ErrorKind::invalid_argument, "gradcheck: instance count must be positive");
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const GradCheckCase& c : cases) {
    GradCheckResult r{c.name, instances, 0.0, true};
    for (std::size_t i = 0; i < instances; ++i) {
      const double e = max_relative_error(c.instance(mix_seed(0x6c6f6361, i)));
      if (!(e <= r.max_rel_error)) r.max_rel_error = e;
    }
    r.passed = r.max_rel_error <= tolerance;
    report.results.push_back(r);
  }
  return report;
}

bool GradCheckReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const GradCheckResult& r) { return r.passed; });
}

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> names;
  for (const auto& r : results) {
    if (!r.passed) names.push_back(r.name);
  }
  return names;
}

std::string GradCheckReport::text() const {
  std::ostringstream os;
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(20) << r.name << " instances=" << r.instances
       << " max_rel_error=" << std::scientific << std::setprecision(3) << r.max_rel_error << '\n'
       << std::defaultfloat;
  }
  os << (passed() ? "all gradient checks passed" : "gradient check FAILED") << " (tolerance "
     << std::scientific << std::setprecision(1) << tolerance << ")\n";
  return os.str();
}

}  // namespace locaug
