// locaug command-line front end.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "locaug/augment.hpp"
#include "locaug/bytes.hpp"
#include "locaug/datasets.hpp"
#include "locaug/error.hpp"
#include "locaug/gradcheck.hpp"
#include "locaug/hash.hpp"
#include "locaug/image_io.hpp"
#include "locaug/model.hpp"
#include "locaug/platform.hpp"
#include "locaug/trainer.hpp"

namespace fs = std::filesystem;
using namespace locaug;

namespace {

// Ordered key=value record; written as the run manifest.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value) {
    for (auto& kv : entries_) {
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    }
    entries_.emplace_back(key, value);
  }
  void note(const std::string& line) { notes_.push_back(line); }

  std::string text() const {
    std::ostringstream os;
    for (const auto& [k, v] : entries_) os << k << '=' << v << '\n';
    for (const auto& n : notes_) os << "# " << n << '\n';
    return os.str();
  }

  void write(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text();
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::vector<std::string> notes_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size()) {
      throw Error(ErrorKind::invalid_argument, std::string(what) + ": '" + text + "' is not a comma-separated list of integers");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorKind::invalid_argument, std::string(what) + ": empty list");
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// "HxW" -> (H, W)
std::pair<std::size_t, std::size_t> parse_resize(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw Error(ErrorKind::invalid_argument, "--resize expects HxW, got '" + text + "'");
  const auto h = parse_sizes(text.substr(0, x), "--resize");
  const auto w = parse_sizes(text.substr(x + 1), "--resize");
  if (h.size() != 1 || w.size() != 1 || h[0] == 0 || w[0] == 0) {
    throw Error(ErrorKind::invalid_argument, "--resize expects HxW, got '" + text + "'");
  }
  return {h[0], w[0]};
}

struct DataOptions {
  std::string root;
  std::string resize;
};

Dataset load_split(const DataOptions& d, const std::string& list, const Task& task) {
  if (d.root.empty()) throw Error(ErrorKind::invalid_argument, "--data is required");
  Dataset data = load_dataset(d.root, list, task);
  if (data.empty()) throw Error(ErrorKind::invalid_argument, "dataset list " + list + " is empty");
  if (!d.resize.empty()) {
    const auto [h, w] = parse_resize(d.resize);
    for (Sample& s : data) {
      s.image = resize_nearest(s.image, h, w);
      s.mask = resize_nearest(s.mask, h, w);
    }
  }
  return data;
}

struct TrainOptions {
  std::string variant = "rgb";
  std::size_t depth = 2;
  std::string widths;
  std::string norm = "unit";
  std::optional<double> lr;
  std::size_t batch = 2;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::string threshold = "adaptive";
  std::string task = "saliency";
  std::string metric;
  std::optional<double> stop_at;
  std::string fit = "reject";
  std::string out = ".";
  DataOptions data;
  std::string train_list = "train.txt";
  std::string val_list;
};

void add_train_options(CLI::App& app, TrainOptions& o) {
  app.add_option("--variant", o.variant, "rgb, rgb+coord, rgb+dist, rgb+dist+coord or rgb+lin")->capture_default_str();
  app.add_option("--depth", o.depth, "number of pooling stages (1-5)")->capture_default_str();
  app.add_option("--widths", o.widths, "channels per stage, e.g. 16,32");
  app.add_option("--norm", o.norm, "location channel range: unit or symmetric")->capture_default_str();
  app.add_option("--lr", o.lr, "learning rate (default 1e-4)");
  app.add_option("--batch", o.batch, "minibatch size")->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
  app.add_option("--seed", o.seed, "initialization and data-order seed")->capture_default_str();
  app.add_option("--optimizer", o.optimizer, "adam or sgd")->capture_default_str();
  app.add_option("--momentum", o.momentum, "SGD momentum (default 0.99)");
  app.add_option("--weight-decay", o.weight_decay, "default 1e-6 for adam, 5e-4 for sgd");
  app.add_option("--threshold", o.threshold, "saliency threshold: adaptive or a value in [0,1]")->capture_default_str();
  app.add_option("--task", o.task, "saliency or multiclass:K")->capture_default_str();
  app.add_option("--metric", o.metric, "selection metric: f_beta, mean_iou or fg_iou");
  app.add_option("--stop-at", o.stop_at, "stop once the validation metric reaches this value");
  app.add_option("--fit", o.fit, "inputs not divisible by 2^depth: reject or pad")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--data", o.data.root, "dataset root (images/, masks/, list files)");
  app.add_option("--resize", o.data.resize, "resize every sample to HxW (nearest)");
  app.add_option("--train-list", o.train_list)->capture_default_str();
  app.add_option("--val-list", o.val_list, "validation list for per-epoch metrics");
}

TrainConfig make_train_config(const TrainOptions& o) {
  TrainConfig cfg;
  cfg.net.depth = o.depth;
  cfg.net.spec.variant = parse_variant(o.variant);
  cfg.net.spec.norm = parse_normalization(o.norm);
  if (!o.widths.empty()) cfg.net.widths = parse_sizes(o.widths, "--widths");
  cfg.net.seed = o.seed;
  cfg.task = parse_task(o.task);
  cfg.net.out_channels = cfg.task.out_channels();
  const OptimizerKind kind = parse_optimizer(o.optimizer);
  const double lr = o.lr.value_or(1e-4);
  cfg.optim = kind == OptimizerKind::adam ? OptimConfig::adam_defaults() : OptimConfig::sgd_defaults(lr);
  cfg.optim.lr = lr;
  if (o.momentum) cfg.optim.momentum = *o.momentum;
  if (o.weight_decay) cfg.optim.weight_decay = *o.weight_decay;
  cfg.batch = o.batch;
  cfg.epochs = o.epochs;
  cfg.threshold = parse_threshold(o.threshold);
  if (o.metric.empty()) {
    cfg.selection = cfg.task.kind == Task::Kind::saliency ? SelectionMetric::f_beta : SelectionMetric::mean_iou;
  } else {
    cfg.selection = parse_selection_metric(o.metric);
  }
  cfg.stop_at = o.stop_at;
  cfg.fit = parse_fit_mode(o.fit);
  // Validate the architecture up front so bad flags fail before data loading.
  (void)SegNet::build(cfg.net);
  return cfg;
}

void record_train_options(Manifest& m, const TrainOptions& o, const TrainConfig& cfg) {
  m.set("variant", std::string(to_string(cfg.net.spec.variant)));
  m.set("depth", std::to_string(cfg.net.depth));
  m.set("widths", join(cfg.net.widths.empty() ? default_widths(cfg.net.depth) : cfg.net.widths));
  m.set("norm", o.norm);
  m.set("lr", fmt(cfg.optim.lr));
  m.set("batch", std::to_string(cfg.batch));
  m.set("epochs", std::to_string(cfg.epochs));
  m.set("seed", std::to_string(cfg.net.seed));
  m.set("optimizer", std::string(to_string(cfg.optim.kind)));
  m.set("momentum", fmt(cfg.optim.momentum));
  m.set("weight-decay", fmt(cfg.optim.weight_decay));
  m.set("threshold", o.threshold);
  m.set("task", cfg.task.describe());
  m.set("metric", std::string(to_string(cfg.selection)));
  if (cfg.stop_at) m.set("stop-at", fmt(*cfg.stop_at));
  m.set("fit", std::string(to_string(cfg.fit)));
  m.set("data", o.data.root);
  if (!o.data.resize.empty()) m.set("resize", o.data.resize);
  m.set("train-list", o.train_list);
  if (!o.val_list.empty()) m.set("val-list", o.val_list);
}

std::string history_line(const EpochRecord& r, SelectionMetric metric) {
  std::ostringstream os;
  os << "epoch=" << r.epoch << " loss=" << std::setprecision(10) << r.loss;
  if (r.metric) os << ' ' << to_string(metric) << '=' << *r.metric;
  return os.str();
}

int run_train(const TrainOptions& o) {
  TrainConfig cfg = make_train_config(o);
  const Dataset train_set = load_split(o.data, o.train_list, cfg.task);
  std::optional<Dataset> val;
  if (!o.val_list.empty()) val = load_split(o.data, o.val_list, cfg.task);

  const fs::path out(o.out);
  fs::create_directories(out);
  cfg.checkpoint_path = (out / "checkpoint.lckp").string();

  Manifest manifest;
  record_train_options(manifest, o, cfg);
  TrainResult result = train(cfg, train_set, val ? &*val : nullptr, [&](const EpochRecord& r) {
    std::cout << history_line(r, cfg.selection) << std::endl;
  });

  const std::vector<std::uint8_t> model = result.net.save();
  bytes::write_file((out / "model.lnet").string(), model);
  manifest.set("params", std::to_string(result.net.param_count()));
  manifest.set("model_hash", git_blob_hash(model));
  for (const auto& r : result.history) manifest.note(history_line(r, cfg.selection));
  if (result.best_epoch) {
    const auto& best = result.history[*result.best_epoch - 1];
    manifest.note("best epoch=" + std::to_string(best.epoch) + ' ' + std::string(to_string(cfg.selection)) + '=' +
                  fmt(*best.metric));
  }
  if (result.stopped_early) manifest.note("stopped early after epoch " + std::to_string(result.history.size()));

  std::cout << "model=" << (out / "model.lnet").string() << "\nmodel_hash=" << git_blob_hash(model) << '\n';
  if (val) {
    const MetricReport report = evaluate_model(result.net, *val, cfg.task, cfg.threshold, cfg.fit);
    std::cout << report.key_values();
    std::ofstream((out / "report.txt")) << report.key_values();
    if (result.best_epoch) std::cout << "best_epoch=" << *result.best_epoch << '\n';
  }
  manifest.write(out / "manifest.txt");
  return 0;
}

struct EvalOptions {
  std::string model;
  DataOptions data;
  std::string list = "test.txt";
  std::string task = "saliency";
  std::string threshold = "adaptive";
  std::string fit = "reject";
  std::string out = ".";
};

int run_eval(const EvalOptions& o) {
  const std::vector<std::uint8_t> bytes = bytes::read_file(o.model);
  const SegNet net = SegNet::load(bytes);
  const Task task = parse_task(o.task);
  const Threshold threshold = parse_threshold(o.threshold);
  const FitMode fit = parse_fit_mode(o.fit);
  const Dataset data = load_split(o.data, o.list, task);
  const MetricReport report = evaluate_model(net, data, task, threshold, fit);
  std::cout << report.table() << report.key_values();

  const fs::path out(o.out);
  fs::create_directories(out);
  std::ofstream(out / "report.txt") << report.key_values();
  Manifest m;
  m.set("model", o.model);
  m.set("model_hash", git_blob_hash(bytes));
  m.set("data", o.data.root);
  if (!o.data.resize.empty()) m.set("resize", o.data.resize);
  m.set("list", o.list);
  m.set("task", task.describe());
  m.set("threshold", o.threshold);
  m.set("fit", o.fit);
  std::istringstream kv(report.key_values());
  for (std::string line; std::getline(kv, line);) m.note(line);
  m.write(out / "manifest.txt");
  return 0;
}

struct BenchOptions {
  TrainOptions train;
  std::string test_list = "test.txt";
  std::string seeds = "0";
  std::vector<std::string> variants;
  std::size_t timing_trials = 5;
};

int run_bench(const BenchOptions& o) {
  BenchConfig cfg;
  cfg.base = make_train_config(o.train);
  cfg.timing_trials = o.timing_trials;
  cfg.seeds.clear();
  for (std::size_t s : parse_sizes(o.seeds, "--seeds")) cfg.seeds.push_back(s);
  if (!o.variants.empty()) {
    cfg.variants.clear();
    for (const auto& v : o.variants) cfg.variants.push_back(parse_variant(v));
  }
  const Dataset train_set = load_split(o.train.data, o.train.train_list, cfg.base.task);
  const Dataset test_set = load_split(o.train.data, o.test_list, cfg.base.task);
  const BenchTable table =
      bench_variants(cfg, train_set, test_set, [](const std::string& line) { std::cout << line << std::endl; });
  std::cout << table.text();

  const fs::path out(o.train.out);
  fs::create_directories(out);
  std::ofstream(out / "bench.txt") << table.text();
  Manifest m;
  record_train_options(m, o.train, cfg.base);
  m.set("test-list", o.test_list);
  m.set("seeds", o.seeds);
  std::string names;
  for (Variant v : cfg.variants) names += (names.empty() ? "" : ",") + std::string(to_string(v));
  m.set("variants", names);
  for (const auto& r : table.rows) {
    std::ostringstream os;
    os << to_string(r.variant) << " in=" << r.in_channels << " params=" << r.param_count << " mean=" << fmt(r.mean)
       << " min=" << fmt(r.min) << " max=" << fmt(r.max);
    m.note(os.str());
  }
  m.write(out / "manifest.txt");
  return 0;
}

int run_gradcheck(std::size_t instances, const std::string& out) {
  const auto cases = default_gradcheck_cases();
  const GradCheckReport report = run_gradchecks(cases, instances);
  std::cout << report.text();
  Manifest m;
  m.set("instances", std::to_string(instances));
  m.set("tolerance", fmt(report.tolerance));
  m.set("passed", report.passed() ? "true" : "false");
  for (const auto& r : report.results) {
    m.note(r.name + " max_rel_error=" + fmt(r.max_rel_error) + (r.passed ? " ok" : " FAIL"));
  }
  m.write(fs::path(out) / "manifest.txt");
  if (!report.passed()) {
    std::string names;
    for (const auto& f : report.failures()) names += (names.empty() ? "" : ",") + f;
    std::cerr << "error kind=gradcheck message=\"gradient mismatch in " << names << "\"\n";
    return 1;
  }
  return 0;
}

struct AugmentOptions {
  std::size_t height = 0;
  std::size_t width = 0;
  std::string variant = "rgb+dist+coord";
  std::string norm = "unit";
  std::string out;
};

int run_augment(const AugmentOptions& o) {
  AugmentSpec spec{parse_variant(o.variant), parse_normalization(o.norm)};
  const Tensor channels = location_channels(o.height, o.width, spec);
  save_tensor_file(o.out, channels);
  Manifest m;
  m.set("height", std::to_string(o.height));
  m.set("width", std::to_string(o.width));
  m.set("variant", o.variant);
  m.set("norm", o.norm);
  m.set("out", o.out);
  m.note("shape=" + shape_string(channels.shape()));
  m.write(o.out + ".manifest.txt");
  std::cout << "wrote " << o.out << " shape=" << shape_string(channels.shape()) << '\n';
  return 0;
}

struct GenOptions {
  std::string kind = "circle";
  std::string out;
  std::size_t train_count = 200;
  std::size_t test_count = 50;
  std::uint64_t seed = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t radius = 14;
  std::optional<std::size_t> center_row;
  std::optional<std::size_t> center_col;
  std::string color_mode = "uniform";
  std::size_t square = 6;
  std::size_t squares = 3;
  double center_radius = 8.0;
};

int run_gen(const GenOptions& o) {
  Dataset train_set, test_set;
  const auto rename = [](Dataset& d, const std::string& prefix) {
    for (Sample& s : d) s.id = prefix + s.id;
  };
  Manifest m;
  m.set("kind", o.kind);
  m.set("out", o.out);
  m.set("train-count", std::to_string(o.train_count));
  m.set("test-count", std::to_string(o.test_count));
  m.set("seed", std::to_string(o.seed));
  if (o.kind == "circle") {
    CircleTaskConfig c;
    c.height = o.height ? o.height : 64;
    c.width = o.width ? o.width : 64;
    c.radius = o.radius;
    c.center_row = o.center_row.value_or(c.height / 2);
    c.center_col = o.center_col.value_or(c.width / 2);
    if (o.color_mode == "uniform") {
      c.color_mode = ColorMode::uniform_random;
    } else if (o.color_mode == "noise") {
      c.color_mode = ColorMode::per_pixel_noise;
    } else {
      throw Error(ErrorKind::invalid_argument, "--color-mode must be 'uniform' or 'noise'");
    }
    c.count = o.train_count;
    c.seed = mix_seed(o.seed, 1);
    train_set = gen_circle_dataset(c);
    c.count = o.test_count;
    c.seed = mix_seed(o.seed, 2);
    test_set = gen_circle_dataset(c);
    m.set("height", std::to_string(c.height));
    m.set("width", std::to_string(c.width));
    m.set("radius", std::to_string(c.radius));
    m.set("center-row", std::to_string(c.center_row));
    m.set("center-col", std::to_string(c.center_col));
    m.set("color-mode", o.color_mode);
  } else if (o.kind == "bias") {
    LocationBiasConfig c;
    c.height = o.height ? o.height : 64;
    c.width = o.width ? o.width : 64;
    c.center_radius = o.center_radius;
    c.square = o.square;
    c.squares = o.squares;
    c.count = o.train_count;
    c.seed = mix_seed(o.seed, 1);
    train_set = gen_location_bias_dataset(c);
    c.count = o.test_count;
    c.seed = mix_seed(o.seed, 2);
    test_set = gen_location_bias_dataset(c);
    m.set("height", std::to_string(c.height));
    m.set("width", std::to_string(c.width));
    m.set("square", std::to_string(c.square));
    m.set("squares", std::to_string(c.squares));
    m.set("center-radius", fmt(c.center_radius));
  } else {
    throw Error(ErrorKind::invalid_argument, "--kind must be 'circle' or 'bias', got '" + o.kind + "'");
  }
  rename(train_set, "train_");
  rename(test_set, "test_");
  const Task task = Task::saliency();
  write_dataset(o.out, train_set, "train.txt", task);
  write_dataset(o.out, test_set, "test.txt", task);
  m.write(fs::path(o.out) / "manifest.txt");
  std::cout << "wrote " << train_set.size() << " train and " << test_set.size() << " test samples to " << o.out
            << '\n';
  return 0;
}

// key=value lines; blank lines and '#' comments ignored.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::bad_format, path + ":" + std::to_string(n) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

// Expands --config FILE into flags placed ahead of the command line, so
// explicit flags win. Keys that the subcommand does not know are skipped,
// which lets a run manifest serve as a config file.
std::vector<std::string> expand_config(CLI::App& app, std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty() || rest.empty()) return rest;
  CLI::App* sub = nullptr;
  for (CLI::App* s : app.get_subcommands({})) {
    if (s->get_name() == rest.front()) sub = s;
  }
  if (!sub) return rest;
  std::vector<std::string> out{rest.front()};
  for (const auto& [key, value] : read_config(path)) {
    if (sub->get_option_no_throw("--" + key) == nullptr) continue;
    out.push_back("--" + key);
    out.push_back(value);
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Location-augmented segmentation networks"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_flag("-h,--help");
  app.footer("Any subcommand accepts --config FILE with key=value lines; explicit flags override it.");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "train a network and write model.lnet and manifest.txt");
  add_train_options(*train_cmd, train_opts);

  EvalOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model file on a dataset");
  eval_cmd->add_option("--model", eval_opts.model)->required();
  eval_cmd->add_option("--data", eval_opts.data.root)->required();
  eval_cmd->add_option("--list", eval_opts.list)->capture_default_str();
  eval_cmd->add_option("--resize", eval_opts.data.resize);
  eval_cmd->add_option("--task", eval_opts.task)->capture_default_str();
  eval_cmd->add_option("--threshold", eval_opts.threshold)->capture_default_str();
  eval_cmd->add_option("--fit", eval_opts.fit)->capture_default_str();
  eval_cmd->add_option("--out", eval_opts.out)->capture_default_str();

  BenchOptions bench_opts;
  auto* bench_cmd = app.add_subcommand("bench", "train and compare input variants over several seeds");
  add_train_options(*bench_cmd, bench_opts.train);
  bench_cmd->add_option("--test-list", bench_opts.test_list)->capture_default_str();
  bench_cmd->add_option("--seeds", bench_opts.seeds, "comma-separated seeds")->capture_default_str();
  bench_cmd->add_option("--variants", bench_opts.variants, "subset of variants (default: all four)")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  bench_cmd->add_option("--timing-trials", bench_opts.timing_trials)->capture_default_str();

  std::size_t gc_instances = 20;
  std::string gc_out = ".";
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  gc_cmd->add_option("--instances", gc_instances)->capture_default_str();
  gc_cmd->add_option("--out", gc_out)->capture_default_str();

  AugmentOptions aug_opts;
  auto* aug_cmd = app.add_subcommand("augment", "write the location channels as a LAUG tensor");
  aug_cmd->add_option("--height", aug_opts.height)->required();
  aug_cmd->add_option("--width", aug_opts.width)->required();
  aug_cmd->add_option("--variant", aug_opts.variant)->capture_default_str();
  aug_cmd->add_option("--norm", aug_opts.norm)->capture_default_str();
  aug_cmd->add_option("--out", aug_opts.out)->required();

  GenOptions gen_opts;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_cmd->add_option("--kind", gen_opts.kind, "circle or bias")->capture_default_str();
  gen_cmd->add_option("--out", gen_opts.out)->required();
  gen_cmd->add_option("--train-count", gen_opts.train_count)->capture_default_str();
  gen_cmd->add_option("--test-count", gen_opts.test_count)->capture_default_str();
  gen_cmd->add_option("--seed", gen_opts.seed)->capture_default_str();
  gen_cmd->add_option("--height", gen_opts.height, "default 64");
  gen_cmd->add_option("--width", gen_opts.width, "default 64");
  gen_cmd->add_option("--radius", gen_opts.radius)->capture_default_str();
  gen_cmd->add_option("--center-row", gen_opts.center_row);
  gen_cmd->add_option("--center-col", gen_opts.center_col);
  gen_cmd->add_option("--color-mode", gen_opts.color_mode, "uniform or noise")->capture_default_str();
  gen_cmd->add_option("--square", gen_opts.square)->capture_default_str();
  gen_cmd->add_option("--squares", gen_opts.squares)->capture_default_str();
  gen_cmd->add_option("--center-radius", gen_opts.center_radius, "bias: first square within this radius of the centre (0: uniform)")
      ->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error kind=usage message=\"" << e.what() << "\"\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error kind=" << to_string(e.kind()) << " message=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    if (*train_cmd) return run_train(train_opts);
    if (*eval_cmd) return run_eval(eval_opts);
    if (*bench_cmd) return run_bench(bench_opts);
    if (*gc_cmd) return run_gradcheck(gc_instances, gc_out);
    if (*aug_cmd) return run_augment(aug_opts);
    if (*gen_cmd) return run_gen(gen_opts);
  } catch (const Error& e) {
    std::cerr << "error kind=" << to_string(e.kind()) << " message=\"" << e.what() << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error kind=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 1;
}
