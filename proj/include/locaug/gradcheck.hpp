#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "locaug/layers.hpp"

namespace locaug {

// Analytic and central-difference gradients of one random instance,
// flattened in the same order.
struct GradientSample {
  std::vector<double> analytic;
  std::vector<double> numeric;
};

struct GradCheckCase {
  std::string name;
  std::function<GradientSample(std::uint64_t seed)> instance;
};

struct GradCheckResult {
  std::string name;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  double tolerance = 0.0;
  std::vector<GradCheckResult> results;

  bool passed() const;
  std::vector<std::string> failures() const;
  std::string text() const;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;

// |a - n| / max(|a|, |n|, 1e-6): relative for ordinary magnitudes, absolute
// near zero where a relative measure is meaningless.
double relative_error(double analytic, double numeric);
double max_relative_error(const GradientSample& sample);

// (f(x + eps e_i) - f(x - eps e_i)) / (2 eps) for every coordinate of x;
// x is restored afterwards.
std::vector<double> central_difference(const std::function<double()>& f, std::span<double> x,
                                       double eps = kFiniteDifferenceStep);

using ConvBackward = std::function<LayerGrad(const Tensor&, const ConvParams&, const Tensor&)>;

GradCheckCase conv_gradcheck_case(std::string name, Padding padding, std::size_t kernel,
                                  ConvBackward backward = conv2d_backward);

// Every layer, both losses, and a depth-2 network end to end.
std::vector<GradCheckCase> default_gradcheck_cases();

// Throws on an empty case list.
GradCheckReport run_gradchecks(std::span<const GradCheckCase> cases, std::size_t instances = 20,
                               double tolerance = kGradTolerance);

}  // namespace locaug
