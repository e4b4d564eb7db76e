#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "locaug/datasets.hpp"
#include "locaug/metrics.hpp"
#include "locaug/model.hpp"
#include "locaug/optim.hpp"

namespace locaug {

// How inputs whose H or W is not a multiple of 2^depth are handled.
enum class FitMode { reject, pad };

std::string_view to_string(FitMode mode);
FitMode parse_fit_mode(std::string_view name);

// Metric used to pick the best epoch and for early stopping.
enum class SelectionMetric { f_beta, mean_iou, foreground_iou };

std::string_view to_string(SelectionMetric m);
SelectionMetric parse_selection_metric(std::string_view name);
double selection_value(const MetricReport& report, SelectionMetric metric);

struct TrainConfig {
  NetConfig net;  // net.seed also drives the data order
  Task task;
  OptimConfig optim;
  std::size_t batch = 2;
  std::size_t epochs = 10;
  Threshold threshold;
  SelectionMetric selection = SelectionMetric::f_beta;
  std::optional<double> stop_at;  // stop once the validation metric reaches this
  FitMode fit = FitMode::reject;
  std::string checkpoint_path;    // rewritten after every epoch when non-empty
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;                 // mean training loss over the epoch's batches
  std::optional<double> metric;      // validation selection metric
};

struct TrainResult {
  SegNet net;
  OptimState optim;
  std::vector<EpochRecord> history;
  std::optional<std::size_t> best_epoch;
  bool stopped_early = false;
};

// Minibatch training with a seeded shuffle per (seed, epoch). Throws
// Error(divergence) naming the epoch and step on a non-finite loss or
// gradient.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset* validation = nullptr,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Augmented, fitted network output for one [1,3,H,W] image, cropped back
// to H x W.
Tensor predict(const SegNet& net, const Tensor& image, FitMode fit = FitMode::reject);

MetricReport evaluate_model(const SegNet& net, const Dataset& data, const Task& task,
                            const Threshold& threshold = {}, FitMode fit = FitMode::reject);

// Seconds per image for augmentation plus forward pass; median over trials.
double time_inference(const SegNet& net, const Dataset& data, std::size_t trials = 5,
                      FitMode fit = FitMode::reject);

// Shuffled sample order for one epoch.
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch);

struct Checkpoint {
  std::size_t epoch = 0;
  SegNet net;
  OptimState optim;
};

// Lossless training state: epoch, model header, f64 parameters, optimizer.
std::vector<std::uint8_t> write_checkpoint(const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::span<const std::uint8_t> bytes);

struct BenchConfig {
  TrainConfig base;
  std::vector<Variant> variants{benchmark_variants.begin(), benchmark_variants.end()};
  std::vector<std::uint64_t> seeds{0};
  std::size_t timing_trials = 5;
};

struct BenchRow {
  Variant variant = Variant::rgb;
  std::size_t in_channels = 0;
  std::size_t param_count = 0;
  std::vector<double> per_seed;
  double mean = 0.0, min = 0.0, max = 0.0;
  double seconds_per_image = 0.0;
};

struct BenchTable {
  std::string metric;
  std::vector<BenchRow> rows;

  const BenchRow& row(Variant v) const;
  std::string text() const;
};

// Trains every variant for every seed with everything else held fixed and
// reports the final-epoch test metric plus per-image inference time.
BenchTable bench_variants(const BenchConfig& config, const Dataset& train_set, const Dataset& test_set,
                          const std::function<void(const std::string&)>& log = {});

}  // namespace locaug
