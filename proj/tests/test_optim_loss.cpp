#include <doctest.h>

#include <cmath>
#include <random>

#include "locaug/error.hpp"
#include "locaug/gradcheck.hpp"
#include "locaug/loss.hpp"
#include "locaug/optim.hpp"

using namespace locaug;

namespace {

struct Scalar {
  Tensor param{Shape{1}};
  Tensor grad{Shape{1}};
  std::vector<Tensor*> params() { return {&param}; }
  std::vector<const Tensor*> grads() const { return {&grad}; }
};

OptimConfig adam(double lr, double wd) {
  OptimConfig c = OptimConfig::adam_defaults();
  c.lr = lr;
  c.weight_decay = wd;
  return c;
}

OptimConfig sgd(double lr, double mu, double wd) {
  OptimConfig c = OptimConfig::sgd_defaults(lr);
  c.momentum = mu;
  c.weight_decay = wd;
  return c;
}

}  // namespace

TEST_CASE("bce examples") {
  const Tensor t({1, 1, 2, 2}, std::vector<double>{0, 1, 1, 0});
  CHECK(bce_loss(t, t).value <= 1e-11);
  CHECK(bce_loss(Tensor({1, 1, 2, 2}, 0.5), t).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const LossResult r = bce_loss(Tensor({1, 1, 2, 2}, 0.5), t);
  CHECK(r.grad.shape() == t.shape());
  CHECK_THROWS_AS(bce_loss(Tensor({1, 1, 2, 3}), t), Error);
  CHECK(std::isfinite(bce_loss(Tensor({1, 1, 2, 2}, 1.0), Tensor({1, 1, 2, 2}, 0.0)).value));
}

TEST_CASE("softmax cross-entropy examples") {
  Tensor logits({1, 2, 1, 1}, std::vector<double>{10, -10});
  CHECK(softmax_ce_loss(logits, Tensor({1, 1, 1, 1}, 0.0)).value <= 1e-8);
  CHECK(softmax_ce_loss(Tensor({1, 4, 2, 2}, 0.3), Tensor({1, 1, 2, 2}, 2.0)).value ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const LossResult ignored = softmax_ce_loss(Tensor({1, 3, 2, 2}, 1.0), Tensor({1, 1, 2, 2}, 255.0));
  CHECK(ignored.value == 0.0);
  for (double g : ignored.grad.values()) CHECK(g == 0.0);

  Tensor mixed({1, 1, 1, 2}, std::vector<double>{1.0, 255.0});
  const LossResult m = softmax_ce_loss(Tensor({1, 3, 1, 2}, 0.0), mixed);
  CHECK(m.value == doctest::Approx(std::log(3.0)));
  CHECK(m.grad.at(0, 0, 0, 1) == 0.0);
  CHECK_THROWS_AS(softmax_ce_loss(Tensor({1, 3, 1, 1}), Tensor({1, 1, 1, 1}, 3.0)), Error);
}

TEST_CASE("loss gradients match finite differences to 1e-6") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor p({2, 1, 3, 3}), t({2, 1, 3, 3});
    for (double& v : p.values()) v = u(rng);
    for (double& v : t.values()) v = u(rng) < 0.5 ? 0.0 : 1.0;
    const LossResult r = bce_loss(p, t);
    const auto num = central_difference([&] { return bce_loss(p, t).value; }, p.data());
    for (std::size_t i = 0; i < num.size(); ++i) CHECK(relative_error(r.grad[i], num[i]) <= 1e-6);

    Tensor logits({2, 3, 2, 2}), labels({2, 1, 2, 2});
    std::normal_distribution<double> n;
    for (double& v : logits.values()) v = 2.0 * n(rng);
    for (double& v : labels.values()) v = std::floor(u(rng) * 3.0);
    labels[0] = 255.0;
    const LossResult s = softmax_ce_loss(logits, labels);
    const auto ns = central_difference([&] { return softmax_ce_loss(logits, labels).value; }, logits.data());
    for (std::size_t i = 0; i < ns.size(); ++i) CHECK(relative_error(s.grad[i], ns[i]) <= 1e-6);
  }
}

TEST_CASE("adam examples") {
  Scalar s;
  s.param[0] = 1.5;
  OptimState st = make_optim_state(adam(1e-3, 0.0), s.params());
  adam_step(s.params(), s.grads(), st);
  CHECK(s.param[0] == 1.5);

  s.grad[0] = 0.5;
  OptimState st2 = make_optim_state(adam(1e-3, 0.0), s.params());
  adam_step(s.params(), s.grads(), st2);
  CHECK(s.param[0] - 1.5 == doctest::Approx(-1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-9));
  CHECK(st2.step == 1);
}

TEST_CASE("adam two steps match a hand-rolled recurrence, with decoupled decay") {
  const double lr = 0.01, wd = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Scalar s;
  s.param[0] = 2.0;
  OptimState st = make_optim_state(adam(lr, wd), s.params());
  double theta = 2.0, m = 0.0, v = 0.0;
  const double grads[2] = {0.3, -0.7};
  for (int t = 1; t <= 2; ++t) {
    s.grad[0] = grads[t - 1];
    adam_step(s.params(), s.grads(), st);
    const double g = grads[t - 1];
    theta -= lr * wd * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
    CHECK(s.param[0] == doctest::Approx(theta).epsilon(1e-14));
  }
}

TEST_CASE("sgd momentum examples") {
  Scalar s;
  s.param[0] = 1.0;
  s.grad[0] = 0.25;
  OptimState plain = make_optim_state(sgd(0.1, 0.0, 0.0), s.params());
  sgd_momentum_step(s.params(), s.grads(), plain);
  CHECK(s.param[0] == doctest::Approx(1.0 - 0.025).epsilon(1e-15));

  Scalar c;
  c.grad[0] = 2.0;
  OptimState mom = make_optim_state(sgd(0.01, 0.99, 0.0), c.params());
  for (int t = 1; t <= 50; ++t) {
    sgd_momentum_step(c.params(), c.grads(), mom);
    const double expected = -0.01 * 2.0 * (1.0 - std::pow(0.99, t)) / 0.01;
    CHECK(mom.first[0][0] == doctest::Approx(expected).epsilon(1e-12));
  }

  Scalar z;
  z.param[0] = 3.0;
  OptimState fixed = make_optim_state(sgd(0.1, 0.99, 0.0), z.params());
  sgd_momentum_step(z.params(), z.grads(), fixed);
  CHECK(z.param[0] == 3.0);
}

TEST_CASE("defaults follow the training recipes") {
  const OptimConfig a = OptimConfig::adam_defaults();
  CHECK(a.kind == OptimizerKind::adam);
  CHECK(a.lr == 1e-4);
  CHECK(a.weight_decay == 1e-6);
  const OptimConfig s = OptimConfig::sgd_defaults(1e-3);
  CHECK(s.kind == OptimizerKind::sgd);
  CHECK(s.momentum == 0.99);
  CHECK(s.weight_decay == 5e-4);
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), Error);
}

TEST_CASE("property: both optimizers decrease a quadratic monotonically below the lr threshold") {
  const double heavy = std::pow(1.0 - std::sqrt(0.9), 2.0);
  const double heavier = std::pow(1.0 - std::sqrt(0.99), 2.0);
  for (auto cfg : {adam(1e-3, 0.0), sgd(heavy, 0.9, 0.0), sgd(0.5 * heavy, 0.9, 0.0), sgd(heavier, 0.99, 0.0),
                   sgd(0.5, 0.0, 0.0), sgd(1.9, 0.0, 0.0)}) {
    Tensor theta({5}, std::vector<double>{1, -2, 0.5, 3, -1});
    std::vector<Tensor*> params{&theta};
    OptimState st = make_optim_state(cfg, params);
    auto f = [&] {
      double s = 0.0;
      for (double v : theta.values()) s += 0.5 * v * v;
      return s;
    };
    double prev = f();
    // Adam covers at most ~0.2 of the smallest |theta_i| = 0.5 in 200 steps.
    for (int i = 0; i < 200; ++i) {
      Tensor g = theta;
      std::vector<const Tensor*> grads{&g};
      optimizer_step(params, grads, st);
      const double now = f();
      REQUIRE(now < prev);
      prev = now;
    }
  }
}

TEST_CASE("momentum above the threshold overshoots") {
  Tensor theta({1}, std::vector<double>{1.0});
  std::vector<Tensor*> params{&theta};
  OptimState st = make_optim_state(sgd(0.1, 0.9, 0.0), params);
  bool crossed = false;
  for (int i = 0; i < 100 && !crossed; ++i) {
    Tensor g = theta;
    std::vector<const Tensor*> grads{&g};
    optimizer_step(params, grads, st);
    crossed = theta[0] < 0.0;
  }
  CHECK(crossed);
}

TEST_CASE("optimizer state and parameters round-trip bit-exactly") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  Tensor a({2, 3}), b({4});
  for (double& v : a.values()) v = n(rng);
  for (double& v : b.values()) v = n(rng);
  std::vector<Tensor*> params{&a, &b};
  OptimState st = make_optim_state(adam(1e-3, 1e-4), params);
  for (int i = 0; i < 3; ++i) {
    Tensor ga = a, gb = b;
    std::vector<const Tensor*> grads{&ga, &gb};
    adam_step(params, grads, st);
  }
  std::vector<std::uint8_t> bytes;
  append_optim_state(bytes, st);
  std::size_t offset = 0;
  CHECK(read_optim_state(bytes, offset) == st);
  CHECK(offset == bytes.size());

  NetConfig cfg;
  cfg.depth = 1;
  cfg.widths = {3};
  SegNet net = SegNet::build(cfg);
  for (Tensor* p : parameter_tensors(net))
    for (double& v : p->values()) v = n(rng);
  std::vector<std::uint8_t> dump;
  append_parameters_f64(dump, net);
  SegNet other = SegNet::build(cfg);
  offset = 0;
  read_parameters_f64(dump, offset, other);
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    CHECK(other.layers()[i].weights == net.layers()[i].weights);
    CHECK(other.layers()[i].bias == net.layers()[i].bias);
  }
}

TEST_CASE("optimizer rejects mismatched gradient shapes") {
  Tensor a({3});
  Tensor g({4});
  std::vector<Tensor*> params{&a};
  std::vector<const Tensor*> grads{&g};
  OptimState st = make_optim_state(adam(1e-3, 0.0), params);
  CHECK_THROWS_AS(adam_step(params, grads, st), Error);
}
