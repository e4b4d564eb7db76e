#include "locaug/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "locaug/augment.hpp"
#include "locaug/bytes.hpp"
#include "locaug/error.hpp"
#include "locaug/loss.hpp"
#include "locaug/platform.hpp"

namespace locaug {

namespace {

constexpr std::uint64_t kOrderStream = 0xDA7A0000;

std::size_t round_up(std::size_t v, std::size_t factor) { return (v + factor - 1) / factor * factor; }

// Zero-pad an NCHW tensor at the bottom/right.
Tensor pad_to(const Tensor& x, std::size_t height, std::size_t width) {
  if (x.extent(2) == height && x.extent(3) == width) return x;
  Tensor out({x.extent(0), x.extent(1), height, width});
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t c = 0; c < x.extent(1); ++c) {
      for (std::size_t h = 0; h < x.extent(2); ++h) {
        for (std::size_t w = 0; w < x.extent(3); ++w) out.at(n, c, h, w) = x.at(n, c, h, w);
      }
    }
  }
  return out;
}

Tensor crop_to(const Tensor& x, std::size_t height, std::size_t width) {
  if (x.extent(2) == height && x.extent(3) == width) return x;
  Tensor out({x.extent(0), x.extent(1), height, width});
  for (std::size_t n = 0; n < x.extent(0); ++n) {
    for (std::size_t c = 0; c < x.extent(1); ++c) {
      for (std::size_t h = 0; h < height; ++h) {
        for (std::size_t w = 0; w < width; ++w) out.at(n, c, h, w) = x.at(n, c, h, w);
      }
    }
  }
  return out;
}

// Network input for an image batch: fitted to the pooling grid, then augmented.
Tensor network_input(const SegNet& net, const Tensor& images, FitMode fit) {
  Tensor x = images;
  if (fit == FitMode::pad) {
    const std::size_t factor = std::size_t{1} << net.depth();
    x = pad_to(images, round_up(images.extent(2), factor), round_up(images.extent(3), factor));
  }
  x = augment_image(x, net.config().spec);
  net.check_input(x.shape());
  return x;
}

bool all_finite(const GradientStore& grads) {
  for (const auto& g : grads) {
    for (const Tensor* t : {&g.d_weights, &g.d_bias}) {
      for (double v : t->values()) {
        if (!std::isfinite(v)) return false;
      }
    }
  }
  return true;
}

LossResult task_loss(const Task& task, const Tensor& prediction, const Tensor& masks) {
  return task.kind == Task::Kind::saliency ? bce_loss(prediction, masks) : softmax_ce_loss(prediction, masks);
}

}  // namespace

std::string_view to_string(FitMode mode) { return mode == FitMode::pad ? "pad" : "reject"; }

FitMode parse_fit_mode(std::string_view name) {
  if (name == "reject") return FitMode::reject;
  if (name == "pad") return FitMode::pad;
  throw Error(ErrorKind::invalid_argument, "fit mode must be 'reject' or 'pad', got '" + std::string(name) + "'");
}

std::string_view to_string(SelectionMetric m) {
  switch (m) {
    case SelectionMetric::f_beta: return "f_beta";
    case SelectionMetric::mean_iou: return "mean_iou";
    case SelectionMetric::foreground_iou: return "fg_iou";
  }
  return "?";
}

SelectionMetric parse_selection_metric(std::string_view name) {
  for (auto m : {SelectionMetric::f_beta, SelectionMetric::mean_iou, SelectionMetric::foreground_iou}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::invalid_argument, "unknown metric '" + std::string(name) + "'");
}

double selection_value(const MetricReport& report, SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::f_beta: return report.f_beta;
    case SelectionMetric::mean_iou: return report.mean_iou;
    case SelectionMetric::foreground_iou: return report.foreground_iou();
  }
  return 0.0;
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, kOrderStream + epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Tensor predict(const SegNet& net, const Tensor& image, FitMode fit) {
  const Tensor out = net.forward(network_input(net, image, fit));
  return crop_to(out, image.extent(2), image.extent(3));
}

MetricReport evaluate_model(const SegNet& net, const Dataset& data, const Task& task, const Threshold& threshold,
                            FitMode fit) {
  if (data.empty()) throw Error(ErrorKind::invalid_argument, "evaluate: empty dataset");
  if (task.out_channels() != net.config().out_channels) {
    throw Error(ErrorKind::invalid_argument, "evaluate: task " + task.describe() + " needs " +
                                                 std::to_string(task.out_channels()) +
                                                 " output channels, model has " +
                                                 std::to_string(net.config().out_channels));
  }
  std::vector<Tensor> predictions, masks;
  predictions.reserve(data.size());
  masks.reserve(data.size());
  for (const Sample& s : data) {
    predictions.push_back(predict(net, s.image, fit));
    masks.push_back(s.mask);
  }
  return evaluate_predictions(predictions, masks, task, threshold);
}

double time_inference(const SegNet& net, const Dataset& data, std::size_t trials, FitMode fit) {
  if (data.empty() || trials == 0) throw Error(ErrorKind::invalid_argument, "time_inference: nothing to time");
  std::vector<double> per_image;
  double sink = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    for (const Sample& s : data) sink += predict(net, s.image, fit)[0];
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    per_image.push_back(elapsed.count() / static_cast<double>(data.size()));
  }
  if (std::isnan(sink)) per_image.push_back(0.0);  // keeps the loop observable
  std::sort(per_image.begin(), per_image.end());
  return per_image[per_image.size() / 2];
}

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset* validation,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  tune_allocator();
  if (train_set.empty()) throw Error(ErrorKind::invalid_argument, "train: empty training set");
  if (config.batch == 0) throw Error(ErrorKind::invalid_argument, "train: batch size must be positive");
  if (config.stop_at && !validation) {
    throw Error(ErrorKind::invalid_argument, "train: early stopping needs a validation set");
  }
  NetConfig net_config = config.net;
  net_config.out_channels = config.task.out_channels();
  TrainResult result{SegNet::build(net_config), {}, {}, std::nullopt, false};
  SegNet& net = result.net;
  const std::vector<Tensor*> params = parameter_tensors(net);
  result.optim = make_optim_state(config.optim, params);

  // Reject unfit inputs before spending any compute.
  for (const Sample& s : train_set) {
    if (config.fit == FitMode::reject) {
      net.check_input({1, net.in_channels(), s.image.extent(2), s.image.extent(3)});
    }
  }

  double best = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(train_set.size(), config.net.seed, epoch);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      std::vector<Tensor> images, masks;
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = train_set[order[i]];
        if (!images.empty() && s.image.shape() != images.front().shape()) {
          throw Error(ErrorKind::shape_mismatch,
                      "train: images in one batch differ in size; resize the dataset or use --batch 1");
        }
        images.push_back(s.image);
        masks.push_back(s.mask);
      }
      const Tensor batch_images = stack_batch(images);
      const Tensor batch_masks = stack_batch(masks);
      const std::size_t h = batch_images.extent(2), w = batch_images.extent(3);

      const ForwardTrace trace = net.forward_trace(network_input(net, batch_images, config.fit));
      const LossResult loss = task_loss(config.task, crop_to(trace.prediction, h, w), batch_masks);
      ++steps;
      const std::string where = "epoch " + std::to_string(epoch) + " step " + std::to_string(steps);
      if (!std::isfinite(loss.value)) {
        throw Error(ErrorKind::divergence, "non-finite loss at " + where);
      }
      const GradientStore grads =
          net.backward(trace, pad_to(loss.grad, trace.prediction.extent(2), trace.prediction.extent(3)));
      if (!all_finite(grads)) throw Error(ErrorKind::divergence, "non-finite gradient at " + where);
      optimizer_step(params, gradient_tensors(grads), result.optim);
      loss_sum += loss.value;
    }

    EpochRecord record{epoch, loss_sum / static_cast<double>(steps), std::nullopt};
    if (validation) {
      const MetricReport report = evaluate_model(net, *validation, config.task, config.threshold, config.fit);
      record.metric = selection_value(report, config.selection);
      if (*record.metric > best) {
        best = *record.metric;
        result.best_epoch = epoch;
      }
    }
    result.history.push_back(record);
    if (!config.checkpoint_path.empty()) {
      bytes::write_file(config.checkpoint_path, write_checkpoint({epoch, net, result.optim}));
    }
    if (on_epoch) on_epoch(record);
    if (config.stop_at && record.metric && *record.metric >= *config.stop_at) {
      result.stopped_early = epoch < config.epochs;
      break;
    }
  }
  return result;
}

std::vector<std::uint8_t> write_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out;
  bytes::put_tag(out, "LCKP");
  bytes::put_u32(out, 1);
  bytes::put_u64(out, ckpt.epoch);
  const std::vector<std::uint8_t> model = ckpt.net.save();
  bytes::put_u64(out, model.size());
  out.insert(out.end(), model.begin(), model.end());
  append_parameters_f64(out, ckpt.net);
  append_optim_state(out, ckpt.optim);
  return out;
}

Checkpoint read_checkpoint(std::span<const std::uint8_t> data) {
  bytes::Reader in(data);
  if (in.tag(4, "checkpoint magic") != "LCKP") throw Error(ErrorKind::bad_format, "bad magic: expected LCKP");
  if (in.u32("checkpoint version") != 1) throw Error(ErrorKind::bad_format, "checkpoint version mismatch");
  const std::uint64_t epoch = in.u64("epoch");
  const std::uint64_t model_size = in.u64("model size");
  in.need(model_size, "model");
  std::size_t offset = in.offset();
  SegNet net = SegNet::load(data.subspan(offset, model_size));
  offset += model_size;
  read_parameters_f64(data, offset, net);
  OptimState optim = read_optim_state(data, offset);
  if (offset != data.size()) throw Error(ErrorKind::bad_format, "checkpoint: trailing bytes");
  return {static_cast<std::size_t>(epoch), std::move(net), std::move(optim)};
}

const BenchRow& BenchTable::row(Variant v) const {
  for (const auto& r : rows) {
    if (r.variant == v) return r;
  }
  throw Error(ErrorKind::invalid_argument, "bench table has no row for " + std::string(to_string(v)));
}

std::string BenchTable::text() const {
  std::ostringstream os;
  os << std::left << std::setw(16) << "variant" << std::setw(5) << "in" << std::setw(10) << "params"
     << std::setw(22) << (metric + " mean+-range") << "sec/image\n";
  for (const auto& r : rows) {
    std::ostringstream score;
    score << std::fixed << std::setprecision(4) << r.mean << " +-" << (r.max - r.min) / 2.0;
    os << std::left << std::setw(16) << to_string(r.variant) << std::setw(5) << r.in_channels << std::setw(10)
       << r.param_count << std::setw(22) << score.str() << std::scientific << std::setprecision(3)
       << r.seconds_per_image << std::defaultfloat << '\n';
  }
  return os.str();
}

BenchTable bench_variants(const BenchConfig& config, const Dataset& train_set, const Dataset& test_set,
                          const std::function<void(const std::string&)>& log) {
  if (config.seeds.empty()) throw Error(ErrorKind::invalid_argument, "bench: at least one seed is required");
  if (config.variants.empty()) throw Error(ErrorKind::invalid_argument, "bench: no variants selected");
  BenchTable table;
  table.metric = config.base.task.kind == Task::Kind::saliency ? "f_beta" : "mean_iou";
  for (Variant v : config.variants) {
    BenchRow row;
    row.variant = v;
    for (std::uint64_t seed : config.seeds) {
      TrainConfig cfg = config.base;
      cfg.net.spec.variant = v;
      cfg.net.seed = seed;
      cfg.stop_at.reset();
      cfg.checkpoint_path.clear();
      TrainResult r = train(cfg, train_set);
      const MetricReport report = evaluate_model(r.net, test_set, cfg.task, cfg.threshold, cfg.fit);
      const double score = config.base.task.kind == Task::Kind::saliency ? report.f_beta : report.mean_iou;
      row.per_seed.push_back(score);
      row.in_channels = r.net.in_channels();
      row.param_count = r.net.param_count();
      if (seed == config.seeds.front()) {
        row.seconds_per_image = time_inference(r.net, test_set, config.timing_trials, cfg.fit);
      }
      if (log) {
        std::ostringstream os;
        os << to_string(v) << " seed=" << seed << ' ' << table.metric << '=' << std::fixed << std::setprecision(4)
           << score;
        log(os.str());
      }
    }
    row.mean = std::accumulate(row.per_seed.begin(), row.per_seed.end(), 0.0) /
               static_cast<double>(row.per_seed.size());
    row.min = *std::min_element(row.per_seed.begin(), row.per_seed.end());
    row.max = *std::max_element(row.per_seed.begin(), row.per_seed.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace locaug
